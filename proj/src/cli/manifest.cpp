#include "cli/manifest.hpp"

#include <openssl/evp.h>
#include <zlib.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>

#include "cli/config.hpp"
#include "longfuse/nifti.hpp"

namespace longfuse::cli {
namespace {

class Sha256 {
public:
  Sha256() : ctx_(EVP_MD_CTX_new(), &EVP_MD_CTX_free) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1)
      throw Error("sha256: digest initialisation failed");
  }
  void update(const void *data, std::size_t len) { EVP_DigestUpdate(ctx_.get(), data, len); }
  std::string hex() {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx_.get(), md, &len);
    static const char *digits = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
      out += digits[md[i] >> 4];
      out += digits[md[i] & 15];
    }
    return out;
  }

private:
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx_;
};

bool is_nifti(const std::string &path) {
  auto ends = [&](std::string_view s) { return path.size() >= s.size() && path.compare(path.size() - s.size(), s.size(), s) == 0; };
  return ends(".nii") || ends(".nii.gz");
}

} // namespace

std::string sha256_hex(std::string_view bytes) {
  Sha256 h;
  h.update(bytes.data(), bytes.size());
  return h.hex();
}

std::string sha256_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw InputError("cannot open " + path);
  Sha256 h;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    h.update(buf, static_cast<std::size_t>(in.gcount()));
  }
  return h.hex();
}

std::string sha256_nifti(const std::string &path) {
  gzFile f = gzopen(path.c_str(), "rb");
  if (!f)
    throw InputError("cannot open " + path);
  Sha256 h;
  char buf[1 << 16];
  int got = 0;
  while ((got = gzread(f, buf, sizeof buf)) > 0)
    h.update(buf, static_cast<std::size_t>(got));
  gzclose(f);
  if (got < 0)
    throw InputError(path + ": decompression failed");
  return h.hex();
}

nlohmann::json file_entry(const std::string &path) {
  return {{"path", path}, {"sha256", is_nifti(path) ? sha256_nifti(path) : sha256_file(path)}};
}

void write_text_atomic(const std::string &path, const std::string &text) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out)
      throw IoError("cannot write " + tmp);
    out << text;
    if (!out.flush())
      throw IoError("write failed: " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot move " + tmp + " into place: " + ec.message());
  }
}

void write_json_atomic(const std::string &path, const nlohmann::json &doc) { write_text_atomic(path, doc.dump(2) + "\n"); }

nlohmann::json manifest_header(const std::string &command) {
  return {{"tool", kToolName}, {"version", kToolVersion}, {"command", command}};
}

} // namespace longfuse::cli
