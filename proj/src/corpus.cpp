#include "vocbench/corpus.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

#include "vocbench/error.hpp"

namespace fs = std::filesystem;

namespace vocbench::corpus {

std::string_view to_string(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Validation: return "validation";
    case Split::Test: return "test";
  }
  return "train";
}

Split parse_split(std::string_view s) {
  if (s == "train") return Split::Train;
  if (s == "validation") return Split::Validation;
  if (s == "test") return Split::Test;
  throw Error(ErrorCode::Usage, "unknown split '" + std::string(s) + "'");
}

std::size_t Manifest::count(Split s) const {
  return static_cast<std::size_t>(std::count_if(
      items.begin(), items.end(), [s](const ManifestItem& i) { return i.split == s; }));
}

std::vector<ManifestItem> Manifest::select(Split s) const {
  std::vector<ManifestItem> out;
  std::copy_if(items.begin(), items.end(), std::back_inserter(out),
               [s](const ManifestItem& i) { return i.split == s; });
  return out;
}

std::uint64_t SplitMix64::next() {
  std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t SplitMix64::uniform(std::uint64_t bound) {
  // Reject the final partial block so every residue is equally likely.
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t v;
  do {
    v = next();
  } while (v >= limit);
  return v % bound;
}

namespace {

bool is_wav(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".wav";
}

// Relative paths of every .wav under `dir`, sorted.
std::vector<fs::path> find_wavs(const fs::path& dir) {
  std::vector<fs::path> out;
  if (!fs::is_directory(dir)) return out;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (entry.is_regular_file() && is_wav(entry.path())) {
      out.push_back(fs::relative(entry.path(), dir));
    }
  }
  std::sort(out.begin(), out.end(),
            [](const fs::path& a, const fs::path& b) { return a.generic_string() < b.generic_string(); });
  return out;
}

void require_unique_ids(const Manifest& m) {
  std::set<std::string> seen;
  for (const auto& item : m.items) {
    if (!seen.insert(item.id).second) {
      throw Error(ErrorCode::DuplicateEntry, "utterance id " + item.id + " appears twice");
    }
  }
}

}  // namespace

Manifest build_lj_manifest(const fs::path& root) {
  auto wavs = find_wavs(root);
  if (wavs.empty()) throw Error(ErrorCode::EmptyCorpus, "no wav files under " + root.string());
  std::sort(wavs.begin(), wavs.end(), [](const fs::path& a, const fs::path& b) {
    return a.filename().string() < b.filename().string();
  });

  Manifest m{"ljspeech", std::nullopt, {}};
  for (std::size_t i = 0; i < wavs.size(); ++i) {
    const Split split = i < kLjTestCount                        ? Split::Test
                        : i < kLjTestCount + kLjValidationCount ? Split::Validation
                                                                : Split::Train;
    m.items.push_back({wavs[i].stem().string(), wavs[i].generic_string(), "LJ", split});
  }
  require_unique_ids(m);

  // metadata.csv lines start with "<id>|"; every listed clip must be present.
  const fs::path metadata = root / "metadata.csv";
  if (fs::exists(metadata)) {
    std::set<std::string> present;
    for (const auto& item : m.items) present.insert(item.id);
    std::ifstream in(metadata);
    std::string line;
    std::vector<std::string> absent;
    while (std::getline(in, line)) {
      const std::string id = line.substr(0, line.find('|'));
      if (!id.empty() && !present.count(id)) absent.push_back(id);
    }
    if (!absent.empty()) {
      std::string msg = std::to_string(absent.size()) + " clips listed in metadata.csv are missing";
      for (std::size_t i = 0; i < std::min<std::size_t>(absent.size(), 5); ++i) msg += " " + absent[i];
      throw Error(ErrorCode::MissingFiles, msg);
    }
  }
  return m;
}

Manifest build_vctk_manifest(const fs::path& root, std::uint64_t seed) {
  auto wavs = find_wavs(root);
  if (wavs.empty()) throw Error(ErrorCode::EmptyCorpus, "no wav files under " + root.string());

  SplitMix64 rng(seed);
  for (std::size_t i = wavs.size() - 1; i > 0; --i) {
    std::swap(wavs[i], wavs[rng.uniform(i + 1)]);
  }

  const std::size_t n = wavs.size();
  const std::size_t n_train = n * 85 / 100;
  const std::size_t n_val = n * 10 / 100;
  Manifest m{"vctk", seed, {}};
  for (std::size_t i = 0; i < n; ++i) {
    const Split split = i < n_train ? Split::Train
                        : i < n_train + n_val ? Split::Validation
                                              : Split::Test;
    const fs::path& p = wavs[i];
    const std::string speaker =
        p.has_parent_path() ? p.parent_path().filename().string() : std::string();
    m.items.push_back({p.stem().string(), p.generic_string(), speaker, split});
  }
  require_unique_ids(m);
  return m;
}

Manifest build_libritts_manifest(const fs::path& root) {
  static constexpr std::array<std::pair<std::string_view, Split>, 4> kSubsets{{
      {"train-clean-100", Split::Train},
      {"train-clean-360", Split::Train},
      {"dev-clean", Split::Validation},
      {"test-clean", Split::Test},
  }};

  Manifest m{"libritts", std::nullopt, {}};
  bool any_subset = false;
  for (const auto& [name, split] : kSubsets) {
    const fs::path dir = root / std::string(name);
    if (!fs::is_directory(dir)) continue;
    any_subset = true;
    for (const auto& rel : find_wavs(dir)) {
      // <speaker>/<chapter>/<utterance>.wav
      const std::string speaker = rel.begin()->string();
      m.items.push_back({rel.stem().string(), (fs::path(std::string(name)) / rel).generic_string(),
                         speaker, split});
    }
  }
  if (!any_subset) {
    throw Error(ErrorCode::UnknownLayout,
                root.string() + " has none of train-clean-100, train-clean-360, dev-clean, test-clean");
  }
  if (m.items.empty()) throw Error(ErrorCode::EmptyCorpus, "no wav files under " + root.string());
  require_unique_ids(m);
  return m;
}

VerifyReport verify_manifest(const Manifest& m, const fs::path& root) {
  VerifyReport report;
  std::set<std::string> listed;
  for (const auto& item : m.items) {
    listed.insert(item.path);
    if (!fs::is_regular_file(root / item.path)) report.missing.push_back(item.path);
  }
  for (const auto& rel : find_wavs(root)) {
    if (!listed.count(rel.generic_string())) report.extra.push_back(rel.generic_string());
  }
  return report;
}

bool speakers_disjoint(const Manifest& m, Split a, Split b) {
  std::set<std::string> in_a;
  for (const auto& item : m.items) {
    if (item.split == a) in_a.insert(item.speaker);
  }
  return std::none_of(m.items.begin(), m.items.end(), [&](const ManifestItem& item) {
    return item.split == b && in_a.count(item.speaker);
  });
}

std::string to_json(const Manifest& m) {
  nlohmann::ordered_json j;
  j["corpus"] = m.corpus;
  j["seed"] = m.seed ? nlohmann::ordered_json(*m.seed) : nlohmann::ordered_json(nullptr);
  auto& items = j["items"] = nlohmann::ordered_json::array();
  for (const auto& item : m.items) {
    items.push_back({{"id", item.id},
                     {"path", item.path},
                     {"speaker", item.speaker},
                     {"split", to_string(item.split)}});
  }
  return j.dump(2) + "\n";
}

Manifest manifest_from_json(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text);
    Manifest m;
    m.corpus = j.at("corpus").get<std::string>();
    if (!j.at("seed").is_null()) m.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& item : j.at("items")) {
      m.items.push_back({item.at("id").get<std::string>(), item.at("path").get<std::string>(),
                         item.at("speaker").get<std::string>(),
                         parse_split(item.at("split").get<std::string>())});
    }
    require_unique_ids(m);
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::SchemaMismatch, std::string("manifest: ") + e.what());
  }
}

void save_manifest(const Manifest& m, const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot create " + path.string());
  out << to_json(m);
  if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
}

Manifest load_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return manifest_from_json(ss.str());
}

}  // namespace vocbench::corpus
