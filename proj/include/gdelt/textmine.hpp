#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "gdelt/error.hpp"
#include "gdelt/ingest.hpp"
#include "json.hpp"

namespace gdelt {

inline const std::set<std::string>& default_stoplist() {
  static const std::set<std::string> words = {
      "a",    "about", "after", "all",   "also",  "an",    "and",  "any",  "are",   "as",
      "at",   "be",    "been",  "but",   "by",    "can",   "could", "did",  "do",    "for",
      "from", "had",   "has",   "have",  "he",    "her",   "his",  "how",  "if",    "in",
      "into", "is",    "it",    "its",   "may",   "more",  "most", "not",  "of",    "on",
      "one",  "or",    "our",   "said",  "she",   "so",    "some", "such", "than",  "that",
      "the",  "their", "them",  "then",  "there", "these", "they", "this", "to",    "was",
      "we",   "were",  "what",  "when",  "which", "while", "who",  "will", "with",  "would"};
  return words;
}

namespace detail {

// Light suffix strip, roughly mirroring the "+term" stemmed notation:
// -ing, -ed, -es, plural -s. No dictionary, so it is an approximation.
inline std::string strip_suffix(std::string t) {
  auto ends_with = [&](std::string_view suf) {
    return t.size() > suf.size() && std::string_view(t).ends_with(suf);
  };
  if (t.size() > 5 && ends_with("ing"))
    t.resize(t.size() - 3);
  else if (t.size() > 4 && ends_with("ed"))
    t.resize(t.size() - 2);
  else if (t.size() > 4 && ends_with("es"))
    t.resize(t.size() - 2);
  else if (t.size() > 3 && t.back() == 's' && !ends_with("ss"))
    t.resize(t.size() - 1);
  return t;
}

}  // namespace detail

// Lowercased alphabetic tokens of length >= 2, stoplist removed. Stemming is
// off by default.
inline std::vector<std::string> tokenize(std::string_view text,
                                         const std::set<std::string>& stoplist,
                                         bool stem = false) {
  std::vector<std::string> out;
  std::string token;
  auto flush = [&] {
    if (token.size() >= 2 && !stoplist.count(token)) {
      out.push_back(stem ? detail::strip_suffix(token) : token);
    }
    token.clear();
  };
  for (char c : text) {
    const unsigned char uc = static_cast<unsigned char>(c);
    if ((uc >= 'a' && uc <= 'z'))
      token += c;
    else if (uc >= 'A' && uc <= 'Z')
      token += static_cast<char>(uc - 'A' + 'a');
    else
      flush();
  }
  flush();
  return out;
}

struct DocTermMatrix {
  enum class Weighting { raw, tfidf };

  std::vector<std::string> terms;              // sorted vocabulary
  std::map<std::string, std::size_t> vocab;    // term -> column
  std::vector<std::string> doc_ids;
  // Per-document (term index, count), sorted by term index.
  std::vector<std::vector<std::pair<std::uint32_t, std::uint32_t>>> doc_counts;
  std::vector<std::size_t> df;                 // document frequency per term
  Weighting weighting = Weighting::raw;

  std::size_t n_docs() const { return doc_counts.size(); }
  std::size_t n_terms() const { return terms.size(); }

  // Dense matrix (docs x terms). tf-idf uses smoothed idf = ln((1+N)/(1+df)) + 1.
  std::vector<double> dense(Weighting w) const {
    std::vector<double> x(n_docs() * n_terms(), 0.0);
    std::vector<double> idf(n_terms(), 1.0);
    if (w == Weighting::tfidf) {
      for (std::size_t t = 0; t < n_terms(); ++t)
        idf[t] = std::log((1.0 + static_cast<double>(n_docs())) /
                          (1.0 + static_cast<double>(df[t]))) +
                 1.0;
    }
    for (std::size_t d = 0; d < n_docs(); ++d)
      for (const auto& [t, c] : doc_counts[d]) x[d * n_terms() + t] = c * idf[t];
    return x;
  }
};

inline DocTermMatrix build_matrix(std::span<const ArticleDoc> docs,
                                  const std::set<std::string>& stoplist, bool stem = false) {
  std::vector<std::map<std::string, std::uint32_t>> counts(docs.size());
  std::set<std::string> vocab_set;
  for (std::size_t d = 0; d < docs.size(); ++d) {
    for (auto& tok : tokenize(docs[d].text, stoplist, stem)) {
      ++counts[d][tok];
      vocab_set.insert(std::move(tok));
    }
  }
  DocTermMatrix m;
  m.terms.assign(vocab_set.begin(), vocab_set.end());
  for (std::size_t t = 0; t < m.terms.size(); ++t) m.vocab[m.terms[t]] = t;
  m.df.assign(m.terms.size(), 0);
  m.doc_counts.resize(docs.size());
  m.doc_ids.reserve(docs.size());
  for (std::size_t d = 0; d < docs.size(); ++d) {
    m.doc_ids.push_back(docs[d].doc_id);
    m.doc_counts[d].reserve(counts[d].size());
    for (const auto& [term, c] : counts[d]) {
      const auto t = static_cast<std::uint32_t>(m.vocab.at(term));
      m.doc_counts[d].push_back({t, c});
      ++m.df[t];
    }
    std::sort(m.doc_counts[d].begin(), m.doc_counts[d].end());
  }
  return m;
}

namespace detail {

inline bool doc_contains(const std::vector<std::pair<std::uint32_t, std::uint32_t>>& doc,
                         std::uint32_t t) {
  const auto it = std::lower_bound(doc.begin(), doc.end(), t,
                                   [](const auto& e, std::uint32_t v) { return e.first < v; });
  return it != doc.end() && it->first == t;
}

}  // namespace detail

// Number of documents containing both terms; cooccurrence(a, a) equals df(a).
inline std::size_t cooccurrence(const DocTermMatrix& m, std::string_view a, std::string_view b) {
  const auto ia = m.vocab.find(std::string(a));
  const auto ib = m.vocab.find(std::string(b));
  if (ia == m.vocab.end() || ib == m.vocab.end()) return 0;
  const auto ta = static_cast<std::uint32_t>(ia->second);
  const auto tb = static_cast<std::uint32_t>(ib->second);
  std::size_t n = 0;
  for (const auto& doc : m.doc_counts)
    if (detail::doc_contains(doc, ta) && detail::doc_contains(doc, tb)) ++n;
  return n;
}

// Dunning log-likelihood ratio over the 2x2 document contingency table
// (both, a-only, b-only, neither).
inline double llr_score(std::size_t both, std::size_t df_a, std::size_t df_b, std::size_t n_docs) {
  const double k11 = static_cast<double>(both);
  const double k12 = static_cast<double>(df_a - both);
  const double k21 = static_cast<double>(df_b - both);
  const double k22 = static_cast<double>(n_docs - df_a - df_b + both);
  const double n = static_cast<double>(n_docs);
  const double row1 = k11 + k12, row2 = k21 + k22;
  const double col1 = k11 + k21, col2 = k12 + k22;
  auto term = [&](double k, double row, double col) {
    if (k <= 0.0 || row <= 0.0 || col <= 0.0) return 0.0;
    return k * std::log(k * n / (row * col));
  };
  return 2.0 * (term(k11, row1, col1) + term(k12, row1, col2) + term(k21, row2, col1) +
                term(k22, row2, col2));
}

struct ConceptLink {
  std::string source, target;
  std::size_t cooccurrence_count = 0;
  double strength = 0.0;  // LLR of document co-occurrence
};

// Strengths within 1e-9 relative count as tied: distinct contingency tables
// can share the same true LLR, and the float sums then differ only in noise.
inline bool llr_near(double a, double b) {
  return std::abs(a - b) <= 1e-9 * std::max({1.0, std::abs(a), std::abs(b)});
}

// Top co-occurring neighbors of `term`, ranked by LLR strength, ties broken by
// raw co-occurrence count then lexicographically. Expanding a neighbor is just
// another call with that neighbor as the term.
inline std::vector<ConceptLink> concept_links(const DocTermMatrix& m, std::string_view term,
                                              std::size_t top_n) {
  const auto it = m.vocab.find(std::string(term));
  if (it == m.vocab.end()) throw Error("concept_links: unknown term '" + std::string(term) + "'");
  const std::uint32_t t0 = static_cast<std::uint32_t>(it->second);

  std::vector<std::size_t> both(m.n_terms(), 0);
  for (const auto& doc : m.doc_counts) {
    bool has = false;
    for (const auto& [t, c] : doc)
      if (t == t0) {
        has = true;
        break;
      }
    if (!has) continue;
    for (const auto& [t, c] : doc) ++both[t];
  }

  std::vector<ConceptLink> links;
  for (std::size_t t = 0; t < m.n_terms(); ++t) {
    if (t == t0 || both[t] == 0) continue;
    ConceptLink link;
    link.source = std::string(term);
    link.target = m.terms[t];
    link.cooccurrence_count = both[t];
    link.strength = llr_score(both[t], m.df[t0], m.df[t], m.n_docs());
    links.push_back(std::move(link));
  }
  std::sort(links.begin(), links.end(), [](const ConceptLink& a, const ConceptLink& b) {
    if (a.strength != b.strength) return a.strength > b.strength;
    if (a.cooccurrence_count != b.cooccurrence_count)
      return a.cooccurrence_count > b.cooccurrence_count;
    return a.target < b.target;
  });
  // Re-rank runs of near-equal strength by the tie-break alone.
  std::size_t run_start = 0;
  for (std::size_t i = 1; i <= links.size(); ++i) {
    if (i < links.size() && llr_near(links[i].strength, links[i - 1].strength)) continue;
    std::sort(links.begin() + static_cast<std::ptrdiff_t>(run_start),
              links.begin() + static_cast<std::ptrdiff_t>(i),
              [](const ConceptLink& a, const ConceptLink& b) {
                if (a.cooccurrence_count != b.cooccurrence_count)
                  return a.cooccurrence_count > b.cooccurrence_count;
                return a.target < b.target;
              });
    run_start = i;
  }
  if (links.size() > top_n) links.resize(top_n);
  return links;
}

struct Topic {
  int rank = 0;       // 1-based position when ordered by n_docs descending
  int component = 0;  // factor index within the run
  std::vector<std::pair<std::string, double>> top_terms;  // <= 5, by weight desc
  std::size_t n_terms = 0;  // terms above the membership cutoff
  std::size_t n_docs = 0;   // documents whose loading share exceeds the threshold
  std::vector<double> term_weights;
  std::vector<std::size_t> doc_members;
};

struct TopicRunOptions {
  std::size_t max_iterations = 200;
  double tolerance = 1e-6;           // stop when relative improvement drops below
  double term_cutoff_sigmas = 1.0;   // n_terms counts weights > mean + k*sigma
  std::optional<double> doc_share_threshold;  // default: 1 / (2k)
  DocTermMatrix::Weighting weighting = DocTermMatrix::Weighting::tfidf;
};

struct TopicRun {
  int k = 0;
  std::uint64_t seed = 0;
  TopicRunOptions options;
  double doc_share_threshold = 0.0;
  std::vector<Topic> topics;       // ordered by n_docs descending
  std::vector<double> objective;   // ||X - WH||_F^2 per accepted iteration
};

// Non-negative factorization of the (tf-idf) doc-term matrix via multiplicative
// updates with seeded uniform initialization. The recorded objective trace is
// non-increasing: an update that would raise it (floating-point noise near
// convergence) is rolled back and the run stops there.
inline TopicRun extract_topics(const DocTermMatrix& m, int k, std::uint64_t seed,
                               TopicRunOptions options = {}) {
  if (k < 1) throw Error("extract_topics: k must be >= 1");
  if (static_cast<std::size_t>(k) > m.n_docs())
    throw Error("extract_topics: k exceeds document count");
  if (m.n_terms() == 0) throw Error("extract_topics: empty vocabulary");

  const std::size_t nd = m.n_docs(), nt = m.n_terms(), nk = static_cast<std::size_t>(k);
  const std::vector<double> x = m.dense(options.weighting);
  if (std::all_of(x.begin(), x.end(), [](double v) { return v == 0.0; }))
    throw Error("extract_topics: degenerate all-zero matrix");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.01, 1.0);
  std::vector<double> w(nd * nk), h(nk * nt);
  for (auto& v : w) v = uni(rng);
  for (auto& v : h) v = uni(rng);

  constexpr double kEps = 1e-12;
  auto objective = [&](const std::vector<double>& W, const std::vector<double>& H) {
    double obj = 0.0;
    for (std::size_t d = 0; d < nd; ++d) {
      for (std::size_t t = 0; t < nt; ++t) {
        double wh = 0.0;
        for (std::size_t j = 0; j < nk; ++j) wh += W[d * nk + j] * H[j * nt + t];
        const double diff = x[d * nt + t] - wh;
        obj += diff * diff;
      }
    }
    return obj;
  };

  TopicRun run;
  run.k = k;
  run.seed = seed;
  run.options = options;
  run.objective.push_back(objective(w, h));

  std::vector<double> wt_x(nk * nt), wt_w(nk * nk), num(nk * nt), xh(nd * nk), hh(nk * nk);
  for (std::size_t iter = 0; iter < options.max_iterations; ++iter) {
    const std::vector<double> w_prev = w, h_prev = h;

    // H <- H .* (W'X) ./ (W'W H)
    std::fill(wt_x.begin(), wt_x.end(), 0.0);
    for (std::size_t d = 0; d < nd; ++d)
      for (std::size_t j = 0; j < nk; ++j) {
        const double wv = w[d * nk + j];
        if (wv == 0.0) continue;
        for (std::size_t t = 0; t < nt; ++t) wt_x[j * nt + t] += wv * x[d * nt + t];
      }
    std::fill(wt_w.begin(), wt_w.end(), 0.0);
    for (std::size_t d = 0; d < nd; ++d)
      for (std::size_t i = 0; i < nk; ++i)
        for (std::size_t j = 0; j < nk; ++j) wt_w[i * nk + j] += w[d * nk + i] * w[d * nk + j];
    for (std::size_t i = 0; i < nk; ++i)
      for (std::size_t t = 0; t < nt; ++t) {
        double denom = 0.0;
        for (std::size_t j = 0; j < nk; ++j) denom += wt_w[i * nk + j] * h[j * nt + t];
        h[i * nt + t] *= wt_x[i * nt + t] / (denom + kEps);
      }

    // W <- W .* (X H') ./ (W H H')
    std::fill(xh.begin(), xh.end(), 0.0);
    for (std::size_t d = 0; d < nd; ++d)
      for (std::size_t t = 0; t < nt; ++t) {
        const double xv = x[d * nt + t];
        if (xv == 0.0) continue;
        for (std::size_t j = 0; j < nk; ++j) xh[d * nk + j] += xv * h[j * nt + t];
      }
    std::fill(hh.begin(), hh.end(), 0.0);
    for (std::size_t i = 0; i < nk; ++i)
      for (std::size_t j = 0; j < nk; ++j) {
        double s = 0.0;
        for (std::size_t t = 0; t < nt; ++t) s += h[i * nt + t] * h[j * nt + t];
        hh[i * nk + j] = s;
      }
    for (std::size_t d = 0; d < nd; ++d)
      for (std::size_t i = 0; i < nk; ++i) {
        double denom = 0.0;
        for (std::size_t j = 0; j < nk; ++j) denom += w[d * nk + j] * hh[j * nk + i];
        w[d * nk + i] *= xh[d * nk + i] / (denom + kEps);
      }

    const double obj = objective(w, h);
    const double prev = run.objective.back();
    if (obj > prev) {
      w = w_prev;
      h = h_prev;
      break;
    }
    run.objective.push_back(obj);
    if (prev > 0 && (prev - obj) / prev < options.tolerance) break;
  }

  run.doc_share_threshold =
      options.doc_share_threshold.value_or(1.0 / (2.0 * static_cast<double>(k)));

  std::vector<Topic> topics(nk);
  for (std::size_t j = 0; j < nk; ++j) {
    Topic& topic = topics[j];
    topic.component = static_cast<int>(j);
    topic.term_weights.assign(h.begin() + static_cast<std::ptrdiff_t>(j * nt),
                              h.begin() + static_cast<std::ptrdiff_t>((j + 1) * nt));
    // Membership cutoff: weights above mean + k sigma of this topic's weights.
    double mean = 0.0;
    for (double v : topic.term_weights) mean += v;
    mean /= static_cast<double>(nt);
    double var = 0.0;
    for (double v : topic.term_weights) var += (v - mean) * (v - mean);
    var /= static_cast<double>(nt);
    const double cutoff = mean + options.term_cutoff_sigmas * std::sqrt(var);
    topic.n_terms = 0;
    for (double v : topic.term_weights)
      if (v > cutoff) ++topic.n_terms;

    std::vector<std::size_t> order(nt);
    for (std::size_t t = 0; t < nt; ++t) order[t] = t;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (topic.term_weights[a] != topic.term_weights[b])
        return topic.term_weights[a] > topic.term_weights[b];
      return m.terms[a] < m.terms[b];
    });
    for (std::size_t t = 0; t < std::min<std::size_t>(5, nt); ++t) {
      if (topic.term_weights[order[t]] <= 0.0) break;
      topic.top_terms.push_back({m.terms[order[t]], topic.term_weights[order[t]]});
    }
  }
  for (std::size_t d = 0; d < nd; ++d) {
    double row_sum = 0.0;
    for (std::size_t j = 0; j < nk; ++j) row_sum += w[d * nk + j];
    if (row_sum <= 0.0) continue;
    for (std::size_t j = 0; j < nk; ++j) {
      if (w[d * nk + j] / row_sum > run.doc_share_threshold) {
        topics[j].doc_members.push_back(d);
        ++topics[j].n_docs;
      }
    }
  }

  std::sort(topics.begin(), topics.end(), [](const Topic& a, const Topic& b) {
    if (a.n_docs != b.n_docs) return a.n_docs > b.n_docs;
    return a.component < b.component;
  });
  for (std::size_t i = 0; i < topics.size(); ++i) topics[i].rank = static_cast<int>(i) + 1;
  run.topics = std::move(topics);
  return run;
}

struct TopicMatch {
  std::size_t index_a = 0, index_b = 0;
  double jaccard = 0.0;
};

namespace detail {

inline std::set<std::string> top_term_set(const Topic& t) {
  std::set<std::string> s;
  for (const auto& [term, w] : t.top_terms) s.insert(term);
  return s;
}

inline double jaccard(const std::set<std::string>& a, const std::set<std::string>& b) {
  if (a.empty() && b.empty()) return 0.0;
  std::size_t inter = 0;
  for (const auto& t : a) inter += b.count(t);
  return static_cast<double>(inter) / static_cast<double>(a.size() + b.size() - inter);
}

}  // namespace detail

// Greedy best-first matching of topics across two runs by top-term Jaccard
// overlap; each topic is matched at most once.
inline std::vector<TopicMatch> common_topics(std::span<const Topic> run_a,
                                             std::span<const Topic> run_b,
                                             double overlap_threshold) {
  std::vector<std::set<std::string>> sets_a, sets_b;
  for (const auto& t : run_a) sets_a.push_back(detail::top_term_set(t));
  for (const auto& t : run_b) sets_b.push_back(detail::top_term_set(t));

  std::vector<TopicMatch> candidates;
  for (std::size_t i = 0; i < sets_a.size(); ++i)
    for (std::size_t j = 0; j < sets_b.size(); ++j) {
      const double jac = detail::jaccard(sets_a[i], sets_b[j]);
      if (jac >= overlap_threshold && jac > 0.0) candidates.push_back({i, j, jac});
    }
  std::sort(candidates.begin(), candidates.end(), [](const TopicMatch& a, const TopicMatch& b) {
    if (a.jaccard != b.jaccard) return a.jaccard > b.jaccard;
    if (a.index_a != b.index_a) return a.index_a < b.index_a;
    return a.index_b < b.index_b;
  });
  std::vector<bool> used_a(sets_a.size(), false), used_b(sets_b.size(), false);
  std::vector<TopicMatch> matches;
  for (const auto& c : candidates) {
    if (used_a[c.index_a] || used_b[c.index_b]) continue;
    used_a[c.index_a] = used_b[c.index_b] = true;
    matches.push_back(c);
  }
  return matches;
}

struct RankDrift {
  std::optional<int> rank_a, rank_b;
};

// Ranks (1-based, by n_docs descending) of the topic best matching the given
// term set in each run; absent when nothing overlaps.
inline RankDrift topic_rank_drift(std::span<const Topic> run_a, std::span<const Topic> run_b,
                                  std::span<const std::string> topic_terms) {
  std::set<std::string> wanted(topic_terms.begin(), topic_terms.end());
  auto best_rank = [&](std::span<const Topic> run) -> std::optional<int> {
    double best = 0.0;
    std::optional<int> rank;
    for (const auto& t : run) {
      const double jac = detail::jaccard(detail::top_term_set(t), wanted);
      if (jac > best) {
        best = jac;
        rank = t.rank;
      }
    }
    return rank;
  };
  return {best_rank(run_a), best_rank(run_b)};
}

// ---- serialization ---------------------------------------------------------

inline void write_links_csv(std::ostream& os, std::span<const ConceptLink> links) {
  std::vector<std::string> row = {"source", "target", "cooccurrence", "strength"};
  write_csv_row(os, row);
  for (const auto& l : links) {
    row = {l.source, l.target, std::to_string(l.cooccurrence_count), fmt_double(l.strength)};
    write_csv_row(os, row);
  }
}

inline void write_topics_csv(std::ostream& os, const TopicRun& run) {
  std::vector<std::string> row = {"rank", "top_terms", "n_terms", "n_docs"};
  write_csv_row(os, row);
  for (const auto& t : run.topics) {
    std::string terms;
    for (const auto& [term, w] : t.top_terms) {
      if (!terms.empty()) terms += ',';
      terms += term;
    }
    row = {std::to_string(t.rank), terms, std::to_string(t.n_terms), std::to_string(t.n_docs)};
    write_csv_row(os, row);
  }
}

inline nlohmann::ordered_json topics_to_json(const TopicRun& run, const DocTermMatrix& m) {
  nlohmann::ordered_json j;
  j["k"] = run.k;
  j["seed"] = run.seed;
  j["weighting"] = run.options.weighting == DocTermMatrix::Weighting::tfidf ? "tfidf" : "raw";
  j["term_cutoff_sigmas"] = run.options.term_cutoff_sigmas;
  j["doc_share_threshold"] = run.doc_share_threshold;
  j["objective"] = run.objective;
  auto arr = nlohmann::ordered_json::array();
  for (const auto& t : run.topics) {
    nlohmann::ordered_json e;
    e["rank"] = t.rank;
    e["component"] = t.component;
    auto terms = nlohmann::ordered_json::array();
    for (const auto& [term, w] : t.top_terms) terms.push_back({{"term", term}, {"weight", w}});
    e["top_terms"] = std::move(terms);
    e["n_terms"] = t.n_terms;
    e["n_docs"] = t.n_docs;
    auto docs = nlohmann::ordered_json::array();
    for (auto d : t.doc_members) docs.push_back(m.doc_ids[d]);
    e["docs"] = std::move(docs);
    e["term_weights"] = t.term_weights;
    arr.push_back(std::move(e));
  }
  j["topics"] = std::move(arr);
  return j;
}

}  // namespace gdelt
