#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <string>
#include <vector>

namespace recgpt::data {

struct Interaction {
  std::string user_id;
  std::string item_id;
  std::int64_t timestamp = 0;

  bool operator==(const Interaction&) const = default;
};

// Reads `user<TAB>item<TAB>timestamp` lines. Blank lines are skipped; any
// other line without exactly three fields, or with a bad timestamp, is a
// DataError naming the 1-based line number.
std::vector<Interaction> ingest_tsv(const std::filesystem::path& path);
std::vector<Interaction> parse_tsv(std::istream& in);

std::vector<Interaction> filter_min_timestamp(std::vector<Interaction> interactions,
                                              std::optional<std::int64_t> min_ts);

// Iterated k-core: drops users with fewer than k interactions and items with
// fewer than k distinct users until both constraints hold. Input order of
// the surviving records is preserved.
std::vector<Interaction> kcore_filter(const std::vector<Interaction>& interactions,
                                      std::size_t k = 5);

}  // namespace recgpt::data
