#include "recgpt/data/interactions.hpp"

#include <charconv>
#include <deque>
#include <fstream>
#include <map>
#include <string_view>
#include <unordered_map>

#include "recgpt/errors.hpp"

namespace recgpt::data {
namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
  return fields;
}

// Dense interning of string ids in order of first appearance.
class Interner {
 public:
  std::size_t intern(const std::string& key) {
    auto [it, inserted] = index_.try_emplace(key, index_.size());
    return it->second;
  }
  std::size_t size() const { return index_.size(); }

 private:
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace

std::vector<Interaction> parse_tsv(std::istream& in) {
  std::vector<Interaction> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_tabs(line);
    if (fields.size() != 3) {
      throw DataError("line " + std::to_string(line_no) + ": expected 3 tab-separated fields, got " +
                      std::to_string(fields.size()));
    }
    if (fields[0].empty() || fields[1].empty()) {
      throw DataError("line " + std::to_string(line_no) + ": empty user or item id");
    }
    std::int64_t ts = 0;
    const auto f = fields[2];
    const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), ts);
    if (ec != std::errc() || ptr != f.data() + f.size() || ts < 0) {
      throw DataError("line " + std::to_string(line_no) + ": bad timestamp '" + std::string(f) +
                      "'");
    }
    out.push_back({std::string(fields[0]), std::string(fields[1]), ts});
  }
  return out;
}

std::vector<Interaction> ingest_tsv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read interaction file " + path.string());
  return parse_tsv(in);
}

std::vector<Interaction> filter_min_timestamp(std::vector<Interaction> interactions,
                                              std::optional<std::int64_t> min_ts) {
  if (!min_ts) return interactions;
  std::erase_if(interactions, [&](const Interaction& x) { return x.timestamp < *min_ts; });
  return interactions;
}

std::vector<Interaction> kcore_filter(const std::vector<Interaction>& interactions,
                                      std::size_t k) {
  if (k < 1) throw ConfigError("kcore_filter: k must be at least 1");

  Interner users, items;
  std::vector<std::size_t> user_of(interactions.size()), item_of(interactions.size());
  for (std::size_t e = 0; e < interactions.size(); ++e) {
    user_of[e] = users.intern(interactions[e].user_id);
    item_of[e] = items.intern(interactions[e].item_id);
  }

  std::vector<std::vector<std::size_t>> edges_of_user(users.size()), edges_of_item(items.size());
  std::vector<std::size_t> user_count(users.size(), 0), item_distinct(items.size(), 0);
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> pair_count;
  for (std::size_t e = 0; e < interactions.size(); ++e) {
    edges_of_user[user_of[e]].push_back(e);
    edges_of_item[item_of[e]].push_back(e);
    ++user_count[user_of[e]];
    if (pair_count[{user_of[e], item_of[e]}]++ == 0) ++item_distinct[item_of[e]];
  }

  std::vector<char> edge_alive(interactions.size(), 1);
  std::vector<char> user_alive(users.size(), 1), item_alive(items.size(), 1);
  std::vector<char> user_queued(users.size(), 0), item_queued(items.size(), 0);
  // Work queue entries: (is_user, index).
  std::deque<std::pair<bool, std::size_t>> queue;
  for (std::size_t u = 0; u < users.size(); ++u) {
    if (user_count[u] < k) {
      queue.emplace_back(true, u);
      user_queued[u] = 1;
    }
  }
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (item_distinct[i] < k) {
      queue.emplace_back(false, i);
      item_queued[i] = 1;
    }
  }

  while (!queue.empty()) {
    const auto [is_user, idx] = queue.front();
    queue.pop_front();
    if (is_user) {
      user_alive[idx] = 0;
      for (std::size_t e : edges_of_user[idx]) {
        if (!edge_alive[e]) continue;
        edge_alive[e] = 0;
        const std::size_t i = item_of[e];
        if (--pair_count[{idx, i}] == 0) {
          --item_distinct[i];
          if (item_alive[i] && !item_queued[i] && item_distinct[i] < k) {
            queue.emplace_back(false, i);
            item_queued[i] = 1;
          }
        }
      }
    } else {
      item_alive[idx] = 0;
      for (std::size_t e : edges_of_item[idx]) {
        if (!edge_alive[e]) continue;
        edge_alive[e] = 0;
        const std::size_t u = user_of[e];
        --user_count[u];
        if (user_alive[u] && !user_queued[u] && user_count[u] < k) {
          queue.emplace_back(true, u);
          user_queued[u] = 1;
        }
      }
    }
  }

  std::vector<Interaction> out;
  for (std::size_t e = 0; e < interactions.size(); ++e) {
    if (edge_alive[e]) out.push_back(interactions[e]);
  }
  return out;
}

}  // namespace recgpt::data
