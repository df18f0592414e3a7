#pragma once

// Independent reference computations used only by tests. Nothing here calls
// into the code paths it is used to check.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

namespace oracle {

inline bool word_char(char c) {
  const auto u = static_cast<unsigned char>(c);
  return std::isalnum(u) || c == '_' || u >= 0x80;
}

// Lowercase and collapse whitespace runs, without trimming.
inline std::string squash(const std::string& s) {
  std::string out;
  bool in_space = false;
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!in_space) out.push_back(' ');
      in_space = true;
    } else {
      out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
      in_space = false;
    }
  }
  return out;
}

struct Hit {
  std::string term;
  std::size_t begin;
  std::size_t end;
};

// Every substring [i, j) whose squashed form equals a term, bounded by
// non-word characters (or the text edges). Terms are assumed canonical.
inline std::vector<Hit> substring_scan(const std::string& text, const std::vector<std::string>& terms) {
  std::vector<Hit> hits;
  for (std::size_t i = 0; i < text.size(); ++i) {
    for (std::size_t j = i + 1; j <= text.size(); ++j) {
      const std::string sub = text.substr(i, j - i);
      if (std::isspace(static_cast<unsigned char>(sub.front())) || std::isspace(static_cast<unsigned char>(sub.back()))) {
        continue;
      }
      for (const auto& t : terms) {
        if (squash(sub) != t) continue;
        if (word_char(t.front()) && i > 0 && word_char(text[i - 1])) continue;
        if (word_char(t.back()) && j < text.size() && word_char(text[j])) continue;
        hits.push_back({t, i, j});
      }
    }
  }
  return hits;
}

// Sets as membership bitmaps over C classes.
using Bits = std::vector<bool>;

struct BruteReport {
  double precision = 0, recall = 0, f1 = 0, f1_cls = 0;
  std::size_t included = 0;
  std::vector<double> f1_c;
};

inline BruteReport brute_metrics(const std::vector<Bits>& pred, const std::vector<Bits>& gt, std::size_t classes) {
  BruteReport r;
  const std::size_t n = pred.size();
  std::vector<double> ps, rs, fs;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t np = 0, ng = 0, both = 0;
    for (std::size_t c = 0; c < classes; ++c) {
      np += pred[i][c];
      ng += gt[i][c];
      both += pred[i][c] && gt[i][c];
    }
    if (np == 0 && ng == 0) {
      ps.push_back(1);
      rs.push_back(1);
      fs.push_back(1);
      continue;
    }
    const double p = np ? double(both) / double(np) : 0.0;
    const double rc = ng ? double(both) / double(ng) : 0.0;
    ps.push_back(p);
    rs.push_back(rc);
    fs.push_back((p + rc) > 0 ? 2 * p * rc / (p + rc) : 0.0);
  }
  r.precision = std::accumulate(ps.begin(), ps.end(), 0.0) / double(n);
  r.recall = std::accumulate(rs.begin(), rs.end(), 0.0) / double(n);
  r.f1 = std::accumulate(fs.begin(), fs.end(), 0.0) / double(n);

  double sum = 0;
  for (std::size_t c = 0; c < classes; ++c) {
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (pred[i][c] && gt[i][c]) ++tp;
      if (pred[i][c] && !gt[i][c]) ++fp;
      if (!pred[i][c] && gt[i][c]) ++fn;
    }
    const double p = (tp + fp) ? double(tp) / double(tp + fp) : 0.0;
    const double rc = (tp + fn) ? double(tp) / double(tp + fn) : 0.0;
    const double f = (p + rc) > 0 ? 2 * p * rc / (p + rc) : 0.0;
    r.f1_c.push_back(f);
    if (tp + fp + fn > 0) {
      ++r.included;
      sum += f;
    }
  }
  r.f1_cls = r.included ? sum / double(r.included) : 0.0;
  return r;
}

// Central finite-difference gradient of f at x.
inline std::vector<double> fd_gradient(const std::function<double(const std::vector<double>&)>& f,
                                       std::vector<double> x, double h = 1e-5) {
  std::vector<double> g(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double orig = x[k];
    x[k] = orig + h;
    const double up = f(x);
    x[k] = orig - h;
    const double down = f(x);
    x[k] = orig;
    g[k] = (up - down) / (2 * h);
  }
  return g;
}

// ||a - b|| / max(||a||, ||b||, floor)
inline double relative_error(const std::vector<double>& a, const std::vector<double>& b, double floor = 1e-8) {
  double diff = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nb), floor});
}

// Among all roundings with each count in {floor(q), ceil(q)} summing to n, the
// one minimizing squared deviation from the quotas q_i = n * w_i / sum(w); ties
// prefer rounding up the lower index. Integer weights keep every comparison exact.
inline std::vector<std::size_t> best_rounding(std::size_t n, const std::vector<long long>& weights) {
  const std::size_t k = weights.size();
  long long total = 0;
  for (auto w : weights) total += w;
  std::vector<std::size_t> best;
  long long best_err = -1;
  // Masks run from "round up index 0" downward so the first minimum found wins ties.
  for (std::size_t m = 0; m < (std::size_t{1} << k); ++m) {
    std::vector<std::size_t> c(k);
    std::size_t sum = 0;
    long long err = 0;  // squared error scaled by total^2
    bool ok = true;
    for (std::size_t i = 0; i < k; ++i) {
      const long long scaled = static_cast<long long>(n) * weights[i];  // q_i * total
      const bool up = (m >> i) & 1;
      if (up && scaled % total == 0) ok = false;
      c[i] = static_cast<std::size_t>(scaled / total) + (up ? 1 : 0);
      sum += c[i];
      const long long d = static_cast<long long>(c[i]) * total - scaled;
      err += d * d;
    }
    if (!ok || sum != n) continue;
    const bool better = best_err < 0 || err < best_err ||
                        (err == best_err && std::lexicographical_compare(best.begin(), best.end(), c.begin(), c.end()));
    if (better) {
      best = c;
      best_err = err;
    }
  }
  return best;
}

}  // namespace oracle
