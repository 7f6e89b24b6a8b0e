#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "gistgraph/error.hpp"
#include "gistgraph/text.hpp"

namespace gistgraph {

using Embedding = std::vector<double>;

/// What an embedded string represents. Providers may use it to pick an
/// instruction prefix, but every kind lands in the same space.
enum class EmbedKind { entity, memory, relation, fact, passage, query };

inline std::string_view to_string(EmbedKind k) {
  switch (k) {
    case EmbedKind::entity: return "entity";
    case EmbedKind::memory: return "memory";
    case EmbedKind::relation: return "relation";
    case EmbedKind::fact: return "fact";
    case EmbedKind::passage: return "passage";
    case EmbedKind::query: return "query";
  }
  return "unknown";
}

inline double l2_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double cosine(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw InvalidArgument("cosine: dimension mismatch (" + std::to_string(a.size()) + " vs " +
                          std::to_string(b.size()) + ")");
  const double na = l2_norm(a);
  const double nb = l2_norm(b);
  if (na == 0.0 || nb == 0.0) throw InvalidArgument("cosine: zero-norm vector");
  return std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
}

struct ScoredId {
  std::string id;
  double score = 0.0;

  friend bool operator==(const ScoredId&, const ScoredId&) = default;
};

/// Descending score, ties broken by ascending id.
inline bool ranks_before(const ScoredId& a, const ScoredId& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.id < b.id;
}

/// Exact top-k over arbitrary (id, score) pairs with the library-wide tie rule.
inline std::vector<ScoredId> top_k(std::vector<ScoredId> scored, std::size_t k) {
  if (k == 0) throw InvalidArgument("top_k: k must be >= 1");
  const auto n = std::min(k, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(n), scored.end(), ranks_before);
  scored.resize(n);
  return scored;
}

class VectorIndex;
inline VectorIndex load_index(const std::string& path);

/// Dense in-memory vector store with brute-force cosine search.
///
/// Vectors are stored L2-normalized; a row whose norm is zero is rejected on insert.
class VectorIndex {
 public:
  explicit VectorIndex(std::size_t dimension = 0) : dim_(dimension) {}

  std::size_t dimension() const noexcept { return dim_; }
  std::size_t size() const noexcept { return ids_.size(); }
  bool empty() const noexcept { return ids_.empty(); }
  const std::vector<std::string>& ids() const noexcept { return ids_; }

  void add(std::string id, std::span<const double> v) {
    if (dim_ == 0) dim_ = v.size();
    if (v.size() != dim_)
      throw InvalidArgument("VectorIndex::add: '" + id + "' has dimension " + std::to_string(v.size()) +
                            ", index expects " + std::to_string(dim_));
    for (double x : v)
      if (!std::isfinite(x)) throw InvalidArgument("VectorIndex::add: '" + id + "' has a non-finite entry");
    const double n = l2_norm(v);
    if (n == 0.0) throw InvalidArgument("VectorIndex::add: '" + id + "' has zero norm");
    append(std::move(id), v, n);
  }

  bool contains(std::string_view id) const { return pos_.find(std::string(id)) != pos_.end(); }

  std::span<const double> vector(std::string_view id) const {
    auto it = pos_.find(std::string(id));
    if (it == pos_.end()) throw InvalidArgument("VectorIndex: unknown id '" + std::string(id) + "'");
    return row(it->second);
  }

  std::span<const double> row(std::size_t i) const { return {data_.data() + i * dim_, dim_}; }

  /// Cosine of `query` against every entry, in insertion order.
  std::vector<ScoredId> score_all(std::span<const double> query) const {
    std::vector<ScoredId> out;
    if (empty()) return out;
    if (query.size() != dim_)
      throw InvalidArgument("VectorIndex: query dimension " + std::to_string(query.size()) + " != " +
                            std::to_string(dim_));
    const double qn = l2_norm(query);
    if (qn == 0.0) throw InvalidArgument("VectorIndex: zero-norm query");
    out.reserve(size());
    for (std::size_t i = 0; i < size(); ++i)
      out.push_back({ids_[i], std::clamp(dot(row(i), query) / qn, -1.0, 1.0)});
    return out;
  }

  std::vector<ScoredId> top_k(std::span<const double> query, std::size_t k) const {
    if (k == 0) throw InvalidArgument("top_k: k must be >= 1");
    if (empty()) return {};
    return gistgraph::top_k(score_all(query), k);
  }

  friend bool operator==(const VectorIndex& a, const VectorIndex& b) {
    return a.dim_ == b.dim_ && a.ids_ == b.ids_ && a.data_ == b.data_;
  }

 private:
  friend VectorIndex load_index(const std::string& path);

  void append(std::string id, std::span<const double> v, double norm) {
    if (!pos_.emplace(id, ids_.size()).second) throw InvalidArgument("VectorIndex::add: duplicate id '" + id + "'");
    ids_.push_back(std::move(id));
    for (double x : v) data_.push_back(x / norm);
  }

  std::size_t dim_;
  std::vector<std::string> ids_;
  std::unordered_map<std::string, std::size_t> pos_;
  std::vector<double> data_;
};

// Index file layout (all integers little-endian):
//   magic "GGVECIDX" | u32 version | u64 dimension | u64 count
//   count x { u32 id_len | id bytes | dimension x f64 }
//   u64 FNV-1a checksum of everything above
namespace detail {

inline constexpr char kIndexMagic[8] = {'G', 'G', 'V', 'E', 'C', 'I', 'D', 'X'};
inline constexpr std::uint32_t kIndexVersion = 1;

inline std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

class BinaryWriter {
 public:
  template <typename T>
  void pod(T v) {
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    buf_.append(buf, sizeof(T));
  }
  void bytes(std::string_view s) { buf_.append(s); }
  void str(std::string_view s) {
    pod(static_cast<std::uint32_t>(s.size()));
    bytes(s);
  }
  void finish_and_write(const std::string& path) {
    pod(fnv1a(buf_));
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + path + "'");
    out.write(buf_.data(), static_cast<std::streamsize>(buf_.size()));
    if (!out) throw Error("write failed for '" + path + "'");
  }

 private:
  std::string buf_;
};

class BinaryReader {
 public:
  BinaryReader(const std::string& path, std::string_view what) : what_(what), path_(path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + std::string(what) + " file '" + path + "'");
    buf_.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    if (buf_.size() < sizeof(std::uint64_t)) fail("file too short");
    std::uint64_t stored;
    std::memcpy(&stored, buf_.data() + buf_.size() - sizeof stored, sizeof stored);
    buf_.resize(buf_.size() - sizeof stored);
    if (fnv1a(buf_) != stored) fail("checksum mismatch (truncated or corrupted)");
  }

  template <typename T>
  T pod() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, buf_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string_view bytes(std::size_t n) {
    need(n);
    auto s = std::string_view(buf_).substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::string str() { return std::string(bytes(pod<std::uint32_t>())); }
  bool at_end() const { return pos_ == buf_.size(); }

  [[noreturn]] void fail(const std::string& why) const {
    throw CorruptFileError(std::string(what_) + " file '" + path_ + "': " + why);
  }

 private:
  void need(std::size_t n) const {
    if (buf_.size() - pos_ < n) fail("unexpected end of data");
  }

  std::string_view what_;
  std::string path_;
  std::string buf_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline void save_index(const VectorIndex& index, const std::string& path) {
  detail::BinaryWriter w;
  w.bytes({detail::kIndexMagic, sizeof detail::kIndexMagic});
  w.pod(detail::kIndexVersion);
  w.pod(static_cast<std::uint64_t>(index.dimension()));
  w.pod(static_cast<std::uint64_t>(index.size()));
  for (std::size_t i = 0; i < index.size(); ++i) {
    w.str(index.ids()[i]);
    for (double x : index.row(i)) w.pod(x);
  }
  w.finish_and_write(path);
}

inline VectorIndex load_index(const std::string& path) {
  detail::BinaryReader r(path, "vector index");
  if (r.bytes(sizeof detail::kIndexMagic) != std::string_view(detail::kIndexMagic, sizeof detail::kIndexMagic))
    r.fail("bad magic header");
  if (const auto v = r.pod<std::uint32_t>(); v != detail::kIndexVersion)
    r.fail("unsupported version " + std::to_string(v));
  const auto dim = r.pod<std::uint64_t>();
  const auto count = r.pod<std::uint64_t>();
  VectorIndex index(dim);
  std::vector<double> row(dim);
  for (std::uint64_t i = 0; i < count; ++i) {
    auto id = r.str();
    for (auto& x : row) {
      x = r.pod<double>();
      if (!std::isfinite(x)) r.fail("non-finite entry for '" + id + "'");
    }
    try {
      index.append(std::move(id), row, 1.0);  // rows are stored normalized
    } catch (const InvalidArgument& e) {
      r.fail(e.what());
    }
  }
  if (!r.at_end()) r.fail("trailing bytes");
  return index;
}

/// Maps strings into the shared vector space. Implementations must be thread-safe.
class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual std::size_t dimension() const = 0;
  virtual std::vector<Embedding> embed_batch(const std::vector<std::string>& texts, EmbedKind kind) const = 0;

  Embedding embed(std::string_view text, EmbedKind kind) const {
    if (text::trim(text).empty()) throw InvalidArgument("embed: empty text");
    return embed_batch({std::string(text)}, kind).front();
  }
};

struct MockEmbedderOptions {
  std::size_t dimension = 256;
  bool bigrams = true;
  bool drop_stopwords = true;  // function words carry no signal and swamp short texts
};

/// Feature hashing of lowercased alphanumeric unigrams (and optionally bigrams),
/// L2-normalized. FNV-1a keeps bucket assignment identical across platforms.
/// Bigrams are formed after stopword removal.
class MockEmbedder final : public Embedder {
 public:
  explicit MockEmbedder(MockEmbedderOptions options = {}) : options_(options) {
    if (options_.dimension == 0) throw InvalidArgument("MockEmbedder: dimension must be positive");
  }

  std::size_t dimension() const override { return options_.dimension; }

  std::vector<Embedding> embed_batch(const std::vector<std::string>& texts, EmbedKind) const override {
    std::vector<Embedding> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(embed_one(t));
    return out;
  }

  /// Lowercased maximal runs of letters/digits; non-ASCII bytes count as letters.
  static std::vector<std::string> features_tokens(std::string_view s) {
    const auto folded = text::casefold(s);
    std::vector<std::string> tokens;
    std::string cur;
    for (char c : folded) {
      const auto u = static_cast<unsigned char>(c);
      if (std::isalnum(u) || u >= 0x80) {
        cur += c;
      } else if (!cur.empty()) {
        tokens.push_back(std::move(cur));
        cur.clear();
      }
    }
    if (!cur.empty()) tokens.push_back(std::move(cur));
    return tokens;
  }

  static bool is_stopword(const std::string& token) {
    static const std::set<std::string, std::less<>> k{
        "a",    "an",   "the",  "of",   "in",    "on",   "at",   "to",    "for",   "by",   "with", "from",
        "and",  "or",   "but",  "is",   "was",   "are",  "were", "be",    "been",  "has",  "have", "had",
        "do",   "does", "did",  "what", "which", "who",  "whom", "whose", "when",  "where", "why", "how",
        "that", "this", "it",   "its",  "as",    "he",   "she",  "his",   "her",   "they", "their", "s"};
    return k.count(token) > 0;
  }

 private:
  Embedding embed_one(std::string_view s) const {
    if (text::trim(s).empty()) throw InvalidArgument("embed: empty text");
    Embedding v(options_.dimension, 0.0);
    auto tokens = features_tokens(s);
    if (options_.drop_stopwords) std::erase_if(tokens, is_stopword);
    auto bump = [&](std::string_view feature) { v[detail::fnv1a(feature) % options_.dimension] += 1.0; };
    for (const auto& t : tokens) bump("u:" + t);
    if (options_.bigrams)
      for (std::size_t i = 1; i < tokens.size(); ++i) bump("b:" + tokens[i - 1] + " " + tokens[i]);
    if (tokens.empty()) bump("raw:" + std::string(s));  // punctuation-only text still gets a direction
    const double n = l2_norm(v);
    for (auto& x : v) x /= n;
    return v;
  }

  MockEmbedderOptions options_;
};

}  // namespace gistgraph
