#include "churnforge/synth.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "churnforge/org_features.hpp"
#include "churnforge/rng.hpp"
#include "churnforge/sha256.hpp"

namespace churnforge {

namespace {

struct FileKind {
  const char* ext;
  const char* dir;
};

constexpr FileKind kKinds[] = {
    {"xsl", "stylesheets"}, {"xml", "data"}, {"java", "src"}, {"c", "native"},
    {"h", "native"},        {"html", "web"}, {"png", "img"},  {"xslt", "stylesheets"},
};

struct LiveFile {
  std::string ext;
  std::vector<std::string> body;
};

std::string xsl_line(Rng& rng, std::size_t n) {
  static const char* const kTemplates[] = {
      R"x(  <xsl:template match="item[@id='%']"><xsl:value-of select="@name"/></xsl:template>)x",
      R"x(  <xsl:template match="section/*"><div class="s%"><xsl:apply-templates select="*"/></div></xsl:template>)x",
      R"x(  <xsl:template name="t%"><xsl:if test="count(node()) > %"><p>{concat('a', 'b')}</p></xsl:if></xsl:template>)x",
      R"x(  <xsl:variable name="v%" select="string-length(title)"/>)x",
      R"x(  <xsl:param name="p%" select="'default'"/>)x",
      R"x(  <!-- revision note % -->)x",
      R"x(  <xsl:template match="para"><xsl:choose><xsl:when test="@role">x</xsl:when><xsl:otherwise>y</xsl:otherwise></xsl:choose></xsl:template>)x",
      R"x(  <xsl:template match="msg%"><xsl:message><xsl:text>seen</xsl:text></xsl:message></xsl:template>)x",
  };
  std::string s = kTemplates[rng.index(std::size(kTemplates))];
  const std::string id = std::to_string(n);
  for (std::size_t pos; (pos = s.find('%')) != std::string::npos;) s.replace(pos, 1, id);
  return s;
}

std::string xml_line(Rng& rng, std::size_t n) {
  const std::string id = std::to_string(n);
  switch (rng.index(3)) {
    case 0: return "  <item id=\"" + id + "\" name=\"n" + id + "\">value " + id + "</item>";
    case 1: return "  <section><title>T" + id + "</title><para role=\"r\">text</para></section>";
    default: return "  <!-- data " + id + " -->";
  }
}

std::string plain_line(Rng& rng, std::size_t n) {
  return "line " + std::to_string(n) + " token " + std::to_string(rng.index(1000));
}

std::string render(const LiveFile& f) {
  std::string out;
  if (f.ext == "xsl" || f.ext == "xslt") {
    out = "<?xml version=\"1.0\"?>\n"
          "<xsl:stylesheet version=\"1.0\" xmlns:xsl=\"http://www.w3.org/1999/XSL/Transform\" "
          "xmlns=\"http://www.w3.org/1999/xhtml\">\n"
          "  <xsl:output method=\"html\"/>\n";
    for (const auto& l : f.body) out += l + "\n";
    out += "</xsl:stylesheet>\n";
  } else if (f.ext == "xml") {
    out = "<?xml version=\"1.0\"?>\n<doc>\n";
    for (const auto& l : f.body) out += l + "\n";
    out += "</doc>\n";
  } else if (f.ext == "png") {
    out = std::string("\x89PNG\r\n\x1a\n\0\0\0\rIHDR", 16);
    for (const auto& l : f.body) out += l;
  } else {
    for (const auto& l : f.body) out += l + "\n";
  }
  return out;
}

std::string make_line(Rng& rng, const std::string& ext, std::size_t n) {
  if (ext == "xsl" || ext == "xslt") return xsl_line(rng, n);
  if (ext == "xml") return xml_line(rng, n);
  return plain_line(rng, n);
}

}  // namespace

HistoryBundle synth_history(const SynthHistoryOptions& options) {
  Rng rng(derive_seed(options.seed, "synth/" + options.project));
  HistoryBundle bundle;
  std::map<std::string, LiveFile> live;
  std::size_t next_file = 0;
  std::size_t next_line = 0;

  std::vector<std::string> authors;
  for (std::size_t d = 0; d < std::max<std::size_t>(options.developers, 1); ++d) {
    authors.push_back("dev" + std::to_string(d) + " <dev" + std::to_string(d) + "@" + options.project + ".example>");
  }

  const std::size_t n = options.revisions;
  const double step = n > 1 ? static_cast<double>(options.span_seconds) / static_cast<double>(n - 1) : 0.0;
  Timestamp last = options.start;
  for (std::size_t i = 0; i < n; ++i) {
    const double progress = n > 1 ? static_cast<double>(i) / static_cast<double>(n - 1) : 0.0;
    const double intensity = options.trend >= 0 ? 0.3 + 1.7 * progress : 2.0 - 1.7 * progress;
    Timestamp ts = options.start + static_cast<Timestamp>(std::llround(step * static_cast<double>(i) +
                                                                       rng.uniform(0.0, 0.4) * step));
    ts = std::max(ts, last + 1);
    last = ts;

    RevisionRecord rec;
    rec.timestamp = ts;
    rec.author = authors[rng.index(authors.size())];
    rec.revision_id = sha256_hex(options.project + "/" + std::to_string(options.seed) + "/" + std::to_string(i))
                          .substr(0, 40);

    const std::size_t touches = 1 + rng.index(3);
    std::set<std::string> touched;
    for (std::size_t k = 0; k < touches; ++k) {
      const double roll = rng.uniform();
      const bool create = live.empty() || roll < (live.size() < 4 ? 0.6 : 0.15);
      const bool remove = !create && !options.additions_only && live.size() > 6 && roll > 0.95;
      if (create) {
        const FileKind& kind = kKinds[rng.index(std::size(kKinds))];
        LiveFile f{kind.ext, {}};
        const std::size_t lines = 3 + rng.index(static_cast<std::size_t>(8 * intensity) + 1);
        for (std::size_t l = 0; l < lines; ++l) f.body.push_back(make_line(rng, f.ext, next_line++));
        const std::string path =
            std::string(kind.dir) + "/file" + std::to_string(next_file++) + "." + kind.ext;
        if (!touched.insert(path).second) continue;
        rec.file_changes.push_back({path, ChangeKind::Added, std::nullopt, bundle.add_blob(render(f))});
        live.emplace(path, std::move(f));
        continue;
      }
      auto it = std::next(live.begin(), static_cast<std::ptrdiff_t>(rng.index(live.size())));
      if (!touched.insert(it->first).second) continue;
      const std::string old_hash = bundle.add_blob(render(it->second));
      if (remove) {
        rec.file_changes.push_back({it->first, ChangeKind::Deleted, old_hash, std::nullopt});
        live.erase(it);
        continue;
      }
      auto& body = it->second.body;
      const std::size_t edits = 1 + static_cast<std::size_t>(std::llround(intensity * (1 + rng.index(4))));
      for (std::size_t e = 0; e < edits; ++e) {
        const std::size_t op = options.additions_only ? 0 : rng.index(3);
        if (op == 0 || body.empty()) {
          const std::size_t at = options.additions_only ? body.size() : rng.index(body.size() + 1);
          body.insert(body.begin() + static_cast<std::ptrdiff_t>(at), make_line(rng, it->second.ext, next_line++));
        } else if (op == 1) {
          body[rng.index(body.size())] = make_line(rng, it->second.ext, next_line++);
        } else {
          body.erase(body.begin() + static_cast<std::ptrdiff_t>(rng.index(body.size())));
        }
      }
      const std::string new_hash = bundle.add_blob(render(it->second));
      if (new_hash == old_hash) continue;
      rec.file_changes.push_back({it->first, ChangeKind::Modified, old_hash, new_hash});
    }
    if (rec.file_changes.empty()) {
      LiveFile f{"txt", {plain_line(rng, next_line++)}};
      const std::string path = "notes/note" + std::to_string(next_file++) + ".txt";
      rec.file_changes.push_back({path, ChangeKind::Added, std::nullopt, bundle.add_blob(render(f))});
      live.emplace(path, std::move(f));
    }
    bundle.revisions.push_back(std::move(rec));
  }
  bundle.extraction_timestamp = last + kSecondsPerDay;
  return bundle;
}

Dataset planted_dataset(const PlantedOptions& options) {
  SynthHistoryOptions h;
  h.project = "planted";
  h.seed = options.history_seed != 0 ? options.history_seed : options.seed;
  h.revisions = options.rows;
  h.developers = 6;
  const HistoryBundle bundle = synth_history(h);
  const auto org = scan_history(bundle);

  Dataset ds;
  for (auto name : org_feature_names()) ds.feature_names.emplace_back(name);
  std::vector<std::array<double, kOrgFeatureCount>> values;
  for (const auto& r : org) values.push_back(r.features.values());

  double lo[3], hi[3];
  for (std::size_t k = 0; k < 3; ++k) {
    lo[k] = hi[k] = values.empty() ? 0.0 : values[0][kPlantedFeatureIndices[k]];
    for (const auto& v : values) {
      lo[k] = std::min(lo[k], v[kPlantedFeatureIndices[k]]);
      hi[k] = std::max(hi[k], v[kPlantedFeatureIndices[k]]);
    }
  }
  // Per-target weights on the three driving features, in LOC.
  constexpr double kWeights[3][3] = {{600, 300, 100}, {200, 500, 300}, {300, 100, 400}};
  constexpr double kOffset = 200;

  Rng rng(derive_seed(options.seed, "planted/" + options.project));
  std::vector<std::array<double, 3>> signal(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    for (std::size_t t = 0; t < 3; ++t) {
      double s = kOffset;
      for (std::size_t k = 0; k < 3; ++k) {
        const double range = hi[k] > lo[k] ? hi[k] - lo[k] : 1.0;
        double u = (values[i][kPlantedFeatureIndices[k]] - lo[k]) / range;
        if (options.sign < 0) u = 1.0 - u;
        s += kWeights[t][k] * u;
      }
      signal[i][t] = s;
    }
  }
  double range[3];
  for (std::size_t t = 0; t < 3; ++t) {
    double a = signal.empty() ? 0 : signal[0][t], b = a;
    for (const auto& s : signal) a = std::min(a, s[t]), b = std::max(b, s[t]);
    range[t] = b - a;
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    DatasetRow row;
    row.project_id = options.project;
    row.revision_id = bundle.revisions[i].revision_id;
    row.timestamp = bundle.revisions[i].timestamp;
    row.features.assign(values[i].begin(), values[i].end());
    std::int64_t* slots[3] = {&row.target.cumulative_yearly_added, &row.target.cumulative_yearly_modified,
                              &row.target.cumulative_yearly_deleted};
    for (std::size_t t = 0; t < 3; ++t) {
      const double y = signal[i][t] + rng.normal() * options.noise_fraction * range[t];
      *slots[t] = std::max<std::int64_t>(0, std::llround(y));
    }
    row.eligible = true;
    ds.rows.push_back(std::move(row));
  }
  return ds;
}

}  // namespace churnforge
