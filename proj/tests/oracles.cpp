#include "oracles.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <set>

namespace oracle {

std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<std::vector<std::size_t>> t(a.size() + 1, std::vector<std::size_t>(b.size() + 1, 0));
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      t[i][j] = a[i - 1] == b[j - 1] ? t[i - 1][j - 1] + 1 : std::max(t[i - 1][j], t[i][j - 1]);
    }
  }
  return t[a.size()][b.size()];
}

namespace {

std::string ext_of(const std::string& path) {
  const std::string base = path.substr(path.rfind('/') == std::string::npos ? 0 : path.rfind('/') + 1);
  const auto dot = base.rfind('.');
  if (dot == std::string::npos) return "";
  std::string e = base.substr(dot + 1);
  for (auto& c : e) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return e;
}

bool has_ext(const std::string& path, std::initializer_list<const char*> exts) {
  const std::string e = ext_of(path);
  for (const char* x : exts) {
    if (e == x) return true;
  }
  return false;
}

}  // namespace

std::vector<std::array<std::int64_t, 13>> org_features(const churnforge::HistoryBundle& bundle) {
  using churnforge::ChangeKind;
  const auto& revs = bundle.revisions;
  std::vector<std::array<std::int64_t, 13>> out;
  const std::vector<std::vector<const char*>> groups = {
      {"xsl", "xslt"}, {"xml"}, {"java"}, {"html", "htm"}, {"c", "h"}, {"gif", "png", "jpg"}};
  for (std::size_t i = 0; i < revs.size(); ++i) {
    std::array<std::int64_t, 13> f{};
    std::set<std::string> devs;
    for (std::size_t k = 0; k <= i; ++k) devs.insert(revs[k].author);
    f[0] = static_cast<std::int64_t>(devs.size());
    for (std::size_t g = 0; g < groups.size(); ++g) {
      std::set<std::string> experts;
      for (std::size_t k = 0; k <= i; ++k) {
        for (const auto& fc : revs[k].file_changes) {
          const std::string e = ext_of(fc.path);
          if (std::any_of(groups[g].begin(), groups[g].end(), [&](const char* x) { return e == x; })) {
            experts.insert(revs[k].author);
          }
        }
      }
      f[1 + g] = static_cast<std::int64_t>(experts.size());
    }
    for (std::size_t k = 0; k <= i; ++k) {
      if (revs[k].author != revs[i].author) continue;
      ++f[7];
      bool xsl = false;
      for (const auto& fc : revs[k].file_changes) xsl = xsl || has_ext(fc.path, {"xsl", "xslt"});
      if (xsl) ++f[8];
    }
    f[9] = static_cast<std::int64_t>(i + 1);
    std::set<std::string> live;
    std::set<std::string> historic;
    for (std::size_t k = 0; k <= i; ++k) {
      for (const auto& fc : revs[k].file_changes) {
        if (fc.kind == ChangeKind::Deleted) {
          live.erase(fc.path);
        } else {
          live.insert(fc.path);
        }
        for (const auto& p : live) {
          if (!ext_of(p).empty()) historic.insert(ext_of(p));
        }
      }
    }
    std::set<std::string> current;
    for (const auto& p : live) {
      if (!ext_of(p).empty()) current.insert(ext_of(p));
    }
    f[10] = static_cast<std::int64_t>(live.size());
    f[11] = static_cast<std::int64_t>(current.size());
    f[12] = static_cast<std::int64_t>(historic.size());
    out.push_back(f);
  }
  return out;
}

std::vector<WindowRow> window_targets(const std::vector<SeriesPoint>& series, std::int64_t horizon,
                                      std::int64_t extraction) {
  std::vector<WindowRow> out(series.size());
  for (std::size_t i = 0; i < series.size(); ++i) {
    for (std::size_t j = 0; j < series.size(); ++j) {
      if (series[j].timestamp > series[i].timestamp && series[j].timestamp <= series[i].timestamp + horizon) {
        for (int c = 0; c < 3; ++c) out[i].target[c] += series[j].churn[c];
      }
    }
    out[i].eligible = series[i].timestamp + horizon <= extraction;
  }
  return out;
}

Metrics metrics(const std::vector<double>& p, const std::vector<double>& a) {
  const double n = static_cast<double>(p.size());
  Metrics m{};
  double mp = 0, ma = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    mp += p[i] / n;
    ma += a[i] / n;
  }
  double cov = 0, vp = 0, va = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    cov += (p[i] - mp) * (a[i] - ma);
    vp += (p[i] - mp) * (p[i] - mp);
    va += (a[i] - ma) * (a[i] - ma);
  }
  m.pearson = vp > 0 && va > 0 ? cov / std::sqrt(vp * va) : 0.0;

  double concordant = 0, discordant = 0, ties_p = 0, ties_a = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    for (std::size_t j = i + 1; j < p.size(); ++j) {
      const double dp = p[i] - p[j];
      const double da = a[i] - a[j];
      if (dp == 0 && da == 0) continue;
      if (dp == 0) {
        ++ties_p;
      } else if (da == 0) {
        ++ties_a;
      } else if ((dp > 0) == (da > 0)) {
        ++concordant;
      } else {
        ++discordant;
      }
    }
  }
  const double denom = std::sqrt((concordant + discordant + ties_p) * (concordant + discordant + ties_a));
  m.kendall = denom > 0 ? (concordant - discordant) / denom : 0.0;

  double abs_sum = 0, sq_sum = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    abs_sum += std::fabs(p[i] - a[i]);
    sq_sum += (p[i] - a[i]) * (p[i] - a[i]);
  }
  m.mae = abs_sum / n;
  m.rmsd = std::sqrt(sq_sum / n);
  m.nmae = ma != 0 ? m.mae / ma : 0.0;
  const double range = *std::max_element(a.begin(), a.end()) - *std::min_element(a.begin(), a.end());
  m.nrmsd = range > 0 ? m.rmsd / range : 0.0;
  return m;
}

}  // namespace oracle
