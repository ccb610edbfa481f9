#include "pabst/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <unordered_map>

#include "pabst/common.hpp"
#include "pabst/text.hpp"

namespace pabst {
namespace {

std::vector<std::string> split_ws(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream ss(text);
  std::string tok;
  while (ss >> tok) out.push_back(tok);
  return out;
}

void check_n(size_t n) {
  if (n < 1 || n > 3) throw ValidationError("n must be 1, 2 or 3");
}

}  // namespace

CorpusStats CorpusStats::build(const std::vector<std::string>& responses) {
  CorpusStats s;
  s.responses = responses.size();
  for (const std::string& r : responses) {
    const std::vector<std::string> toks = split_ws(r);
    for (size_t n = 1; n <= 3; ++n) {
      for (size_t i = 0; i + n <= toks.size(); ++i) {
        ++s.ngrams[n - 1][std::vector<std::string>(toks.begin() + static_cast<long>(i),
                                                    toks.begin() + static_cast<long>(i + n))];
        ++s.totals[n - 1];
      }
    }
  }
  return s;
}

double distinct_n(const std::vector<std::string>& responses, size_t n, DistinctMode mode) {
  check_n(n);
  if (responses.empty()) throw ValidationError("no responses");
  if (mode == DistinctMode::kPooled) {
    const CorpusStats s = CorpusStats::build(responses);
    if (s.totals[n - 1] == 0) throw ValidationError("no n-grams");
    return 100.0 * static_cast<double>(s.ngrams[n - 1].size()) /
           static_cast<double>(s.totals[n - 1]);
  }
  double sum = 0.0;
  size_t counted = 0;
  for (const std::string& r : responses) {
    const CorpusStats s = CorpusStats::build({r});
    if (s.totals[n - 1] == 0) continue;
    sum += 100.0 * static_cast<double>(s.ngrams[n - 1].size()) /
           static_cast<double>(s.totals[n - 1]);
    ++counted;
  }
  if (counted == 0) throw ValidationError("no n-grams");
  return sum / static_cast<double>(counted);
}

double ngram_entropy(const std::vector<std::string>& responses, size_t n) {
  check_n(n);
  const CorpusStats s = CorpusStats::build(responses);
  if (s.totals[n - 1] == 0) throw ValidationError("no n-grams");
  const double total = static_cast<double>(s.totals[n - 1]);
  double h = 0.0;
  for (const auto& [gram, count] : s.ngrams[n - 1]) {
    const double p = static_cast<double>(count) / total;
    h -= p * std::log(p);
  }
  return h;
}

double entr(const std::vector<std::string>& responses) {
  const CorpusStats s = CorpusStats::build(responses);
  if (s.totals[2] == 0) throw ValidationError("ENTR needs at least one trigram");
  double product = 1.0;
  for (size_t n = 1; n <= 3; ++n) {
    const double h = ngram_entropy(responses, n);
    if (h <= 0.0) return 0.0;
    product *= h;
  }
  return std::cbrt(product);
}

double overlap_f1(const std::string& response, const std::string& story) {
  std::unordered_map<std::string, int> a;
  std::unordered_map<std::string, int> b;
  const std::vector<std::string> ra = tokenize(response);
  const std::vector<std::string> sb = tokenize(story);
  if (ra.empty() || sb.empty()) return 0.0;
  for (const std::string& t : ra) ++a[t];
  for (const std::string& t : sb) ++b[t];
  int common = 0;
  for (const auto& [tok, count] : a) {
    auto it = b.find(tok);
    if (it != b.end()) common += std::min(count, it->second);
  }
  if (common == 0) return 0.0;
  const double p = static_cast<double>(common) / static_cast<double>(ra.size());
  const double r = static_cast<double>(common) / static_cast<double>(sb.size());
  return 2.0 * p * r / (p + r);
}

SystemMetrics score_system(const std::vector<std::string>& responses,
                           const std::vector<std::string>& stories) {
  if (responses.size() != stories.size()) {
    throw ValidationError("responses and stories differ in count");
  }
  SystemMetrics m;
  m.n = responses.size();
  const CorpusStats s = CorpusStats::build(responses);
  auto safe_distinct = [&](size_t n) {
    return s.totals[n - 1] == 0 ? 0.0 : distinct_n(responses, n);
  };
  m.d1 = safe_distinct(1);
  m.d2 = safe_distinct(2);
  m.entr = s.totals[2] == 0 ? 0.0 : entr(responses);
  double sum = 0.0;
  for (size_t i = 0; i < responses.size(); ++i) sum += overlap_f1(responses[i], stories[i]);
  m.mean_overlap_f1 = responses.empty() ? 0.0 : sum / static_cast<double>(responses.size());
  return m;
}

Json metrics_to_json(const SystemMetrics& m) {
  return Json{{"d1", m.d1},
              {"d2", m.d2},
              {"entr", m.entr},
              {"mean_overlap_f1", m.mean_overlap_f1},
              {"n", m.n}};
}

std::string format_table(const std::vector<std::pair<std::string, SystemMetrics>>& rows) {
  size_t width = 6;
  for (const auto& row : rows) width = std::max(width, row.first.size());
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%-*s %8s %8s %8s %10s %6s\n", static_cast<int>(width),
                "system", "D-1", "D-2", "ENTR", "overlap", "n");
  out += buf;
  for (const auto& [name, m] : rows) {
    std::snprintf(buf, sizeof(buf), "%-*s %8.2f %8.2f %8.3f %10.3f %6zu\n",
                  static_cast<int>(width), name.c_str(), m.d1, m.d2, m.entr, m.mean_overlap_f1,
                  m.n);
    out += buf;
  }
  return out;
}

}  // namespace pabst
