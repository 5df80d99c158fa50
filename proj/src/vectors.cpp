#include "cr2/vectors.hpp"

#include "cr2/commitment.hpp"
#include "cr2/error.hpp"
#include "cr2/keccak.hpp"
#include "cr2/merkle.hpp"
#include "cr2/secp256k1.hpp"
#include "cr2/typed_data.hpp"

#include <fstream>
#include <sstream>

namespace cr2 {

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(line);
  while (std::getline(in, item, sep))
    if (!item.empty()) out.push_back(item);
  return out;
}

std::string as_text(const std::string& hex) {
  auto raw = from_hex(hex);
  return std::string(raw.begin(), raw.end());
}

template <typename Fn>
VectorReport for_each_record(const std::filesystem::path& file, Fn&& fn) {
  VectorReport report;
  std::ifstream in(file);
  if (!in) {
    report.failures.push_back("cannot open " + file.string());
    return report;
  }
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    auto fields = split(line, ' ');
    try {
      if (fn(fields))
        ++report.checked;
      else
        report.failures.push_back(file.filename().string() + ":" + std::to_string(line_no) + " mismatch");
    } catch (const std::exception& e) {
      report.failures.push_back(file.filename().string() + ":" + std::to_string(line_no) + " " + e.what());
    }
  }
  return report;
}

bool check_crypto_record(const std::vector<std::string>& f) {
  const std::string& kind = f.at(0);
  if (kind == "keccak") {
    Bytes input = f.at(1) == "-" ? Bytes{} : from_hex(f.at(1));
    return keccak(input) == Digest32::from_hex(f.at(2));
  }
  if (kind == "chain") {
    auto chain = derive_chain(Bytes32::from_hex(f.at(1)));
    return chain.inner == Digest32::from_hex(f.at(2)) && chain.outer == Digest32::from_hex(f.at(3));
  }
  if (kind == "eip712") {
    TypedMessage msg{std::stoull(f.at(1)), Address::from_hex(f.at(2)), std::stoull(f.at(3)), std::stoull(f.at(4)),
                     Digest32::from_hex(f.at(5))};
    return typed_digest(msg, as_text(f.at(6)), as_text(f.at(7))) == Digest32::from_hex(f.at(8));
  }
  if (kind == "sign") {
    SigningKey key(Bytes32::from_hex(f.at(1)));
    auto digest = Digest32::from_hex(f.at(2));
    RecoverableSignature expected{static_cast<std::uint8_t>(std::stoul(f.at(4))), Bytes32::from_hex(f.at(5)),
                                  Bytes32::from_hex(f.at(6))};
    auto sig = sign(digest, key);
    auto address = Address::from_hex(f.at(3));
    return key.address() == address && sig == expected && recover(digest, sig) == address;
  }
  throw ProtocolError(Errc::InvalidArgument, "unknown record kind " + kind);
}

bool check_merkle_record(const std::vector<std::string>& f) {
  if (f.at(0) != "merkle") throw ProtocolError(Errc::InvalidArgument, "unknown record kind " + f.at(0));
  std::vector<Digest32> leaves;
  for (const auto& hex : split(f.at(2), ',')) leaves.push_back(Digest32::from_hex(hex));
  if (leaves.size() != std::stoul(f.at(1))) return false;
  return merkle_root(leaves) == Digest32::from_hex(f.at(3));
}

}  // namespace

void VectorReport::merge(const VectorReport& other) {
  checked += other.checked;
  failures.insert(failures.end(), other.failures.begin(), other.failures.end());
}

VectorReport check_crypto_vectors(const std::filesystem::path& file) {
  return for_each_record(file, check_crypto_record);
}

VectorReport check_merkle_vectors(const std::filesystem::path& file) {
  return for_each_record(file, check_merkle_record);
}

VectorReport check_all_vectors(const std::filesystem::path& dir) {
  VectorReport report = check_crypto_vectors(dir / "crypto_vectors.txt");
  report.merge(check_merkle_vectors(dir / "merkle_vectors.txt"));
  return report;
}

}  // namespace cr2
