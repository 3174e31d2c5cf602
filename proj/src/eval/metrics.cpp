// SPDX-License-Identifier: Apache-2.0
#include "mlms/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "mlms/error.hpp"

namespace mlms::eval {

double roc_auc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  if (scores.size() != labels.size()) throw UserError("roc_auc: scores and labels differ in length");
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] > 1) throw UserError("roc_auc: labels must be 0 or 1");
    if (std::isnan(scores[i])) throw DataError("roc_auc: NaN score");
    n_pos += labels[i];
  }
  const std::size_t n_neg = labels.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) throw UserError("roc_auc: need at least one positive and one negative");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // ranks i+1..j
    for (std::size_t t = i; t < j; ++t) {
      if (labels[order[t]]) rank_sum += avg_rank;
    }
    i = j;
  }
  const double np = static_cast<double>(n_pos), nn = static_cast<double>(n_neg);
  return (rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

void ScoreMatrix::validate() const {
  if (scores.size() != n_clips * n_tags || labels.size() != n_clips * n_tags) {
    throw UserError("score matrix: data size does not match n_clips x n_tags");
  }
  if (tags.size() != n_tags) throw UserError("score matrix: tag names do not match n_tags");
}

TagAucs tag_aucs(const ScoreMatrix& m) {
  m.validate();
  TagAucs out;
  out.auc.assign(m.n_tags, std::nan(""));
  std::vector<double> s(m.n_clips);
  std::vector<std::uint8_t> y(m.n_clips);
  double total = 0.0;
  std::size_t used = 0;
  for (std::size_t t = 0; t < m.n_tags; ++t) {
    std::size_t pos = 0;
    for (std::size_t c = 0; c < m.n_clips; ++c) {
      s[c] = m.scores[c * m.n_tags + t];
      y[c] = m.labels[c * m.n_tags + t];
      pos += y[c];
    }
    if (pos == 0 || pos == m.n_clips) {
      out.excluded.push_back(m.tags[t]);
      continue;
    }
    out.auc[t] = roc_auc(s, y);
    total += out.auc[t];
    ++used;
  }
  if (used == 0) throw UserError("mean AUC: no tag has both positive and negative examples");
  out.mean = total / static_cast<double>(used);
  return out;
}

double mean_auc(const ScoreMatrix& m, std::vector<std::string>* excluded) {
  TagAucs a = tag_aucs(m);
  if (excluded) *excluded = std::move(a.excluded);
  return a.mean;
}

double accuracy(std::span<const std::uint32_t> predicted, std::span<const std::uint32_t> truth) {
  if (predicted.empty()) throw UserError("accuracy: empty input");
  if (predicted.size() != truth.size()) throw UserError("accuracy: length mismatch");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) hits += predicted[i] == truth[i];
  return static_cast<double>(hits) / static_cast<double>(predicted.size());
}

std::vector<std::uint32_t> argmax_rows(std::span<const float> scores, std::size_t k) {
  if (k == 0 || scores.size() % k != 0) throw UserError("argmax_rows: bad width");
  std::vector<std::uint32_t> out(scores.size() / k);
  for (std::size_t r = 0; r < out.size(); ++r) {
    const float* row = scores.data() + r * k;
    out[r] = static_cast<std::uint32_t>(std::max_element(row, row + k) - row);
  }
  return out;
}

std::size_t TagReport::config_index(const std::string& name) const {
  const auto it = std::find(configurations.begin(), configurations.end(), name);
  if (it == configurations.end()) throw UserError("tag report: unknown configuration '" + name + "'");
  return static_cast<std::size_t>(it - configurations.begin());
}

TagReport per_tag_report(const std::vector<std::pair<std::string, ScoreMatrix>>& configurations,
                         const std::string& baseline) {
  if (configurations.empty()) throw UserError("tag report: no configurations");
  TagReport r;
  r.baseline = baseline;
  const ScoreMatrix& first = configurations.front().second;
  std::vector<TagAucs> aucs;
  for (const auto& [name, m] : configurations) {
    if (m.n_clips != first.n_clips || m.tags != first.tags || m.labels != first.labels) {
      throw UserError("tag report: configuration '" + name + "' does not share tags, clips and labels");
    }
    r.configurations.push_back(name);
    aucs.push_back(tag_aucs(m));
    r.mean.push_back(aucs.back().mean);
  }
  const std::size_t base = r.config_index(baseline);
  r.excluded = aucs[base].excluded;

  std::vector<std::size_t> order(first.n_tags);
  std::iota(order.begin(), order.end(), 0);
  const std::vector<double>& b = aucs[base].auc;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    if (std::isnan(b[x]) != std::isnan(b[y])) return std::isnan(b[y]);
    return b[x] > b[y];
  });
  for (std::size_t t : order) r.tags.push_back(first.tags[t]);
  for (std::size_t c = 0; c < configurations.size(); ++c) {
    std::vector<double> a, d;
    for (std::size_t t : order) {
      a.push_back(aucs[c].auc[t]);
      d.push_back(aucs[c].auc[t] - b[t]);
    }
    r.auc.push_back(std::move(a));
    r.increment.push_back(std::move(d));
  }
  return r;
}

namespace {

std::string num(double v) {
  if (std::isnan(v)) return "NA";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

std::string TagReport::to_csv() const {
  const std::size_t base = config_index(baseline);
  std::string out = "tag";
  for (const std::string& c : configurations) out += ",auc:" + c;
  for (std::size_t c = 0; c < configurations.size(); ++c) {
    if (c != base) out += ",delta:" + configurations[c];
  }
  out += '\n';
  for (std::size_t t = 0; t < tags.size(); ++t) {
    out += tags[t];
    for (std::size_t c = 0; c < configurations.size(); ++c) out += ',' + num(auc[c][t]);
    for (std::size_t c = 0; c < configurations.size(); ++c) {
      if (c != base) out += ',' + num(increment[c][t]);
    }
    out += '\n';
  }
  out += "mean";
  for (std::size_t c = 0; c < configurations.size(); ++c) out += ',' + num(mean[c]);
  for (std::size_t c = 0; c < configurations.size(); ++c) {
    if (c != base) out += ',' + num(mean[c] - mean[base]);
  }
  out += '\n';
  return out;
}

std::string summary_table(const std::vector<SummaryRow>& rows, const std::string& metric,
                          const std::vector<std::string>& notes) {
  std::size_t width = std::string("configuration").size();
  for (const SummaryRow& r : rows) width = std::max(width, r.configuration.size());
  char line[256];
  std::string out = "# metric: " + metric + '\n';
  for (const std::string& n : notes) out += "# " + n + '\n';
  std::snprintf(line, sizeof line, "%-*s  %-6s  %s\n", static_cast<int>(width), "configuration", "model", "value");
  out += line;
  for (const SummaryRow& r : rows) {
    std::snprintf(line, sizeof line, "%-*s  %-6s  %.4f\n", static_cast<int>(width), r.configuration.c_str(),
                  r.model.c_str(), r.value);
    out += line;
  }
  return out;
}

}  // namespace mlms::eval
