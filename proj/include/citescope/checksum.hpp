#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <string>

namespace citescope::checksum {

// Incremental SHA-256 (OpenSSL EVP); hex_digest finalizes the stream.
class Sha256 {
 public:
  Sha256();
  ~Sha256();
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;

  void update(const void* data, std::size_t len);
  void update(const Eigen::Ref<const Eigen::MatrixXd>& m);
  std::string hex_digest();

 private:
  void* ctx_;
};

std::string sha256_hex(const void* data, std::size_t len);
std::string sha256_hex(const std::string& s);

}  // namespace citescope::checksum
