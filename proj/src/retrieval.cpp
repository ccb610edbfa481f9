#include "pabst/retrieval.hpp"

#include <cstring>
#include <fstream>

#include "pabst/jsonl.hpp"

namespace pabst {
namespace {

constexpr char kIndexMagic[8] = {'P', 'B', 'S', 'T', 'I', 'D', 'X', '1'};

Vector row_norms(const Matrix& rows) {
  Vector norms = rows.rowwise().norm();
  for (Eigen::Index i = 0; i < norms.size(); ++i) {
    if (!(norms(i) > 0.0)) throw ValidationError("degenerate embedding");
  }
  return norms;
}

// Cosine matrix between two row sets given their norms.
Matrix cosines(const Matrix& a, const Vector& na, const Matrix& b, const Vector& nb) {
  Matrix c = a * b.transpose();
  for (Eigen::Index i = 0; i < c.rows(); ++i) {
    for (Eigen::Index j = 0; j < c.cols(); ++j) c(i, j) /= na(i) * nb(j);
  }
  return c;
}

MatchScore combine(const Matrix& cos) {
  MatchScore s;
  s.precision = cos.rowwise().maxCoeff().mean();
  s.recall = cos.colwise().maxCoeff().mean();
  s.f1 = s.precision + s.recall > 0.0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall)
                                      : 0.0;
  return s;
}

template <class T>
void put(std::ofstream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <class T>
T get(std::ifstream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw ValidationError("truncated story index");
  return value;
}

void put_string(std::ofstream& out, const std::string& s) {
  put<uint32_t>(out, static_cast<uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::ifstream& in) {
  const uint32_t n = get<uint32_t>(in);
  std::string s(n, '\0');
  in.read(s.data(), n);
  if (!in) throw ValidationError("truncated story index");
  return s;
}

}  // namespace

Matrix embed_tokens(const LanguageModel& lm, std::string_view text) {
  const TokenSequence ids = lm.vocab.encode(text);
  if (ids.empty()) throw ValidationError("no content tokens");
  if (ids.size() > lm.params.shape.max_positions) {
    throw ValidationError("text longer than the model's position limit");
  }
  return forward(lm.params, ids).states;
}

MatchScore greedy_match_f1(const Matrix& candidate, const Matrix& reference) {
  if (candidate.rows() == 0 || reference.rows() == 0) {
    throw ValidationError("greedy_match_f1 needs nonempty row sets");
  }
  if (candidate.cols() != reference.cols()) throw ValidationError("embedding width mismatch");
  return combine(cosines(candidate, row_norms(candidate), reference, row_norms(reference)));
}

StoryIndex::StoryIndex(uint64_t model_fingerprint, std::vector<StoryEntry> entries)
    : fingerprint_(model_fingerprint), entries_(std::move(entries)) {
  for (StoryEntry& e : entries_) {
    if (static_cast<size_t>(e.embeddings.rows()) != e.token_ids.size()) {
      throw ValidationError("story '" + e.id + "': embedding rows differ from token count");
    }
    e.norms = row_norms(e.embeddings);
  }
}

const StoryEntry* StoryIndex::find(std::string_view id) const {
  for (const StoryEntry& e : entries_) {
    if (e.id == id) return &e;
  }
  return nullptr;
}

void StoryIndex::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot write " + path);
  out.write(kIndexMagic, sizeof(kIndexMagic));
  put<uint64_t>(out, fingerprint_);
  const uint32_t d = entries_.empty() ? 0 : static_cast<uint32_t>(entries_[0].embeddings.cols());
  put<uint32_t>(out, d);
  put<uint32_t>(out, static_cast<uint32_t>(entries_.size()));
  for (const StoryEntry& e : entries_) {
    put_string(out, e.id);
    put_string(out, e.text);
    put<uint32_t>(out, static_cast<uint32_t>(e.token_ids.size()));
    for (TokenId t : e.token_ids) put<uint32_t>(out, t);
    out.write(reinterpret_cast<const char*>(e.embeddings.data()),
              static_cast<std::streamsize>(e.embeddings.size() * sizeof(double)));
  }
  if (!out) throw ValidationError("write failed: " + path);
}

StoryIndex StoryIndex::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kIndexMagic, sizeof(magic)) != 0) {
    throw ValidationError(path + ": not a story index");
  }
  const uint64_t fingerprint = get<uint64_t>(in);
  const uint32_t d = get<uint32_t>(in);
  const uint32_t count = get<uint32_t>(in);
  std::vector<StoryEntry> entries(count);
  for (StoryEntry& e : entries) {
    e.id = get_string(in);
    e.text = get_string(in);
    e.token_ids.resize(get<uint32_t>(in));
    for (TokenId& t : e.token_ids) t = get<uint32_t>(in);
    e.embeddings.resize(static_cast<Eigen::Index>(e.token_ids.size()), d);
    in.read(reinterpret_cast<char*>(e.embeddings.data()),
            static_cast<std::streamsize>(e.embeddings.size() * sizeof(double)));
    if (!in) throw ValidationError("truncated story index");
  }
  return StoryIndex(fingerprint, std::move(entries));
}

std::vector<StoryRecord> read_story_corpus(const std::string& path) {
  std::vector<StoryRecord> out;
  read_jsonl(path, [&out](const Json& obj, size_t) {
    StoryRecord r{require_string(obj, "id"), require_string(obj, "text")};
    if (r.text.empty()) throw ValidationError("empty story");
    out.push_back(std::move(r));
  });
  return out;
}

StoryIndex index_stories(const LanguageModel& lm, const std::vector<StoryRecord>& stories) {
  std::vector<StoryEntry> entries;
  entries.reserve(stories.size());
  for (const StoryRecord& r : stories) {
    StoryEntry e;
    e.id = r.id;
    e.text = r.text;
    e.token_ids = lm.vocab.encode(r.text);
    try {
      e.embeddings = embed_tokens(lm, r.text);
    } catch (const ValidationError& err) {
      throw ValidationError("story '" + r.id + "': " + err.what());
    }
    entries.push_back(std::move(e));
  }
  return StoryIndex(lm.params.fingerprint(), std::move(entries));
}

StoryIndex index_stories(const LanguageModel& lm, const std::string& corpus_path) {
  return index_stories(lm, read_story_corpus(corpus_path));
}

RetrievalResult retrieve(const StoryIndex& index, const Matrix& attribute_rows) {
  if (index.empty()) throw ValidationError("empty story index");
  const Vector attr_norms = row_norms(attribute_rows);
  RetrievalResult best;
  for (const StoryEntry& e : index.entries()) {
    const MatchScore s = combine(cosines(attribute_rows, attr_norms, e.embeddings, e.norms));
    if (best.story == nullptr || s.f1 > best.score.f1 ||
        (s.f1 == best.score.f1 && e.id < best.story->id)) {
      best.story = &e;
      best.score = s;
    }
  }
  return best;
}

RetrievalResult retrieve(const StoryIndex& index, const LanguageModel& lm,
                         std::string_view attribute) {
  if (index.model_fingerprint() != lm.params.fingerprint()) {
    throw ValidationError("story index was built with a different model");
  }
  return retrieve(index, embed_tokens(lm, attribute));
}

}  // namespace pabst
