#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace vocbench::corpus {

enum class Split { Train, Validation, Test };

std::string_view to_string(Split s);
/// Accepts "train", "validation" and "test".
Split parse_split(std::string_view s);

struct ManifestItem {
  std::string id;
  std::string path;  // relative to the corpus root, '/' separated
  std::string speaker;
  Split split;

  bool operator==(const ManifestItem&) const = default;
};

struct Manifest {
  std::string corpus;
  std::optional<std::uint64_t> seed;
  std::vector<ManifestItem> items;

  std::size_t count(Split s) const;
  std::vector<ManifestItem> select(Split s) const;

  bool operator==(const Manifest&) const = default;
};

/// Portable 64-bit SplitMix generator; the VCTK shuffle is defined in terms of it.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next();
  /// Uniform integer in [0, bound) by rejection, bound > 0.
  std::uint64_t uniform(std::uint64_t bound);

 private:
  std::uint64_t state_;
};

inline constexpr std::uint64_t kDefaultSeed = 42;
inline constexpr std::size_t kLjTestCount = 20;
inline constexpr std::size_t kLjValidationCount = 10;

/// Lexicographic filename order: first 20 test, next 10 validation, rest train.
/// When metadata.csv is present, every id it lists must exist on disk.
Manifest build_lj_manifest(const std::filesystem::path& root);

/// Seeded shuffle, then floor(0.85 N) train, floor(0.10 N) validation and the
/// remainder test.
Manifest build_vctk_manifest(const std::filesystem::path& root,
                             std::uint64_t seed = kDefaultSeed);

/// train-clean-100/360 -> train, dev-clean -> validation, test-clean -> test.
Manifest build_libritts_manifest(const std::filesystem::path& root);

struct VerifyReport {
  std::vector<std::string> missing;  // in the manifest, absent on disk
  std::vector<std::string> extra;    // on disk, absent from the manifest

  bool consistent() const { return missing.empty() && extra.empty(); }
};

VerifyReport verify_manifest(const Manifest& m, const std::filesystem::path& root);

/// True when no speaker of split `a` also appears in split `b`.
bool speakers_disjoint(const Manifest& m, Split a, Split b);

/// Stable-key-order JSON, newline-terminated.
std::string to_json(const Manifest& m);
Manifest manifest_from_json(std::string_view text);
void save_manifest(const Manifest& m, const std::filesystem::path& path);
Manifest load_manifest(const std::filesystem::path& path);

}  // namespace vocbench::corpus
