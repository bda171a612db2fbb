/*
 * Copyright 2026 The SMS Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *   http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "sms/attnviz.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <sstream>

namespace sms::viz {

using nlohmann::json;

void AttentionTrace::validate() const {
  const std::size_t n = tokens.size();
  if (n == 0) throw DataError("attention trace " + id + " has no tokens");
  for (const auto& l : layers) {
    if (l.weights.size() != n) {
      throw DataError("attention trace " + id + ": layer " + l.name + " has " + std::to_string(l.weights.size()) +
                      " weights for " + std::to_string(n) + " tokens");
    }
    if (l.t == 0) throw DataError("attention trace " + id + ": layer " + l.name + " has window 0");
    double sum = 0;
    for (double w : l.weights) {
      if (!(w >= 0)) throw DataError("attention trace " + id + ": layer " + l.name + " has a negative weight");
      sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-6) {
      throw DataError("attention trace " + id + ": layer " + l.name + " sums to " + std::to_string(sum));
    }
  }
}

const AttentionLayer& AttentionTrace::layer(const std::string& name) const {
  for (const auto& l : layers) {
    if (l.name == name) return l;
  }
  throw LookupError("attention trace " + id + " has no layer " + name);
}

json AttentionTrace::to_json() const {
  json ls = json::array();
  for (const auto& l : layers) ls.push_back({{"name", l.name}, {"t", l.t}, {"weights", l.weights}});
  return {{"id", id}, {"tokens", tokens}, {"layers", ls}, {"predicted", predicted}, {"gold", gold}};
}

AttentionTrace AttentionTrace::from_json(const json& j) {
  AttentionTrace t;
  try {
    t.id = j.value("id", std::string());
    t.tokens = j.at("tokens").get<std::vector<std::string>>();
    for (const auto& l : j.at("layers")) {
      t.layers.push_back({l.at("name").get<std::string>(), l.value("t", std::size_t{1}),
                          l.at("weights").get<std::vector<double>>()});
    }
    t.predicted = j.value("predicted", std::string());
    t.gold = j.value("gold", std::string());
  } catch (const json::exception& e) {
    throw ParseError(std::string("attention trace: ") + e.what());
  }
  return t;
}

template <typename T>
AttentionTrace make_trace(const Example& ex, const head::SmsOutput<T>& out, const std::string& predicted,
                          const std::string& gold) {
  AttentionTrace tr;
  tr.id = ex.id;
  tr.tokens = ex.tokens;
  tr.predicted = predicted;
  tr.gold = gold;
  auto add = [&](const std::string& name, std::size_t t, const ad::Tensor<T>& w) {
    if (!w.valid()) return;
    auto v = w.value();
    tr.layers.push_back({name, t, std::vector<double>(v.begin(), v.end())});
  };
  add("mention_1", 1, out.attn_mention_1);
  add("mention_2", 1, out.attn_mention_2);
  add("global", 1, out.attn_global);
  for (const auto& [t, w] : out.attn_segment) add("segment_" + std::to_string(t), t, w);
  if (!tr.layers.empty() && tr.layers.front().weights.size() != tr.tokens.size()) {
    // Precomputed encoders may carry marker rows; label them.
    const std::size_t rows = tr.layers.front().weights.size();
    if (rows == tr.tokens.size() + 2) {
      tr.tokens.insert(tr.tokens.begin(), "[CLS]");
      tr.tokens.push_back("[SEP]");
    }
  }
  return tr;
}

template AttentionTrace make_trace(const Example&, const head::SmsOutput<float>&, const std::string&,
                                   const std::string&);
template AttentionTrace make_trace(const Example&, const head::SmsOutput<double>&, const std::string&,
                                   const std::string&);

AttentionTrace trace_prediction(const RelationModel<float>& model, const Example& ex) {
  ad::Graph<float> g(0, false);
  auto out = model.forward(g, ex);
  auto p = out.probs.value();
  const auto label = static_cast<std::uint32_t>(std::max_element(p.begin(), p.end()) - p.begin());
  const std::string gold = ex.has_label ? model.vocab().relation_label(ex.label) : "";
  return make_trace(ex, out, model.vocab().relation_label(label), gold);
}

double default_threshold(std::size_t n) { return n == 0 ? 0.0 : 1.5 / static_cast<double>(n); }

std::vector<double> token_intensity(const AttentionLayer& layer, std::size_t n, double threshold) {
  std::vector<double> out(n, 0.0);
  if (layer.weights.empty()) return out;
  const double mx = *std::max_element(layer.weights.begin(), layer.weights.end());
  if (mx <= 0) return out;
  for (std::size_t i = 0; i < layer.weights.size(); ++i) {
    const double w = layer.weights[i];
    if (w < threshold) continue;
    for (std::size_t j = i; j < std::min(n, i + layer.t); ++j) out[j] = std::max(out[j], w / mx);
  }
  return out;
}

namespace {

struct Palette {
  const char* family;
  int ramp[5];      // 256-colour background codes, light to dark
  int rgb[3];       // HTML base colour
};

const Palette& palette_for(const std::string& layer) {
  static const Palette mention{"mention", {189, 153, 117, 75, 33}, {33, 102, 214}};
  static const Palette global{"global", {194, 157, 120, 83, 46}, {34, 160, 60}};
  static const Palette segment{"segment", {224, 217, 210, 203, 196}, {220, 50, 40}};
  if (layer.rfind("mention", 0) == 0) return mention;
  if (layer.rfind("global", 0) == 0) return global;
  return segment;
}

std::string html_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&#39;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string fixed6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string render_terminal(const AttentionTrace& tr, double threshold, bool color) {
  std::ostringstream out;
  std::size_t w = 6;
  for (const auto& l : tr.layers) w = std::max(w, l.name.size());
  out << "id: " << tr.id << "  predicted: " << tr.predicted << "  gold: " << tr.gold << "\n";
  if (color) {
    out << "legend:";
    for (const char* fam : {"mention", "global", "segment"}) {
      const auto& p = palette_for(fam);
      out << ' ' << fam << ' ';
      for (int c : p.ramp) out << "\x1b[48;5;" << c << "m  \x1b[0m";
    }
    out << "\n";
  } else {
    out << "legend: [token weight] marks weights at or above " << fixed6(threshold) << "\n";
  }
  for (const auto& l : tr.layers) {
    const auto inten = token_intensity(l, tr.tokens.size(), threshold);
    const auto& p = palette_for(l.name);
    std::string label = l.name;
    label.resize(w, ' ');
    out << label << " |";
    for (std::size_t j = 0; j < tr.tokens.size(); ++j) {
      out << ' ';
      if (inten[j] <= 0) {
        out << tr.tokens[j];
      } else if (color) {
        const int level = std::clamp(static_cast<int>(std::ceil(inten[j] * 5)) - 1, 0, 4);
        out << "\x1b[48;5;" << p.ramp[level] << "m" << tr.tokens[j] << "\x1b[0m";
      } else {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.2f", l.weights[j]);
        out << '[' << tr.tokens[j] << ' ' << buf << ']';
      }
    }
    out << "\n";
  }
  return out.str();
}

std::string render_html(const AttentionTrace& tr, double threshold) {
  std::ostringstream out;
  out << "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n"
      << "<title>attention " << html_escape(tr.id) << "</title>\n<style>\n"
      << "body{font-family:sans-serif;margin:1.5em;}\n"
      << "table{border-collapse:collapse;margin-bottom:1em;}\n"
      << "th{text-align:left;padding:4px 10px 4px 0;font-weight:normal;color:#555;white-space:nowrap;}\n"
      << "td{padding:4px 0;}\n"
      << ".tok{display:inline-block;padding:1px 3px;margin:1px;border-radius:3px;}\n"
      << ".swatch{display:inline-block;width:1.2em;height:1em;margin-right:2px;}\n"
      << "</style>\n</head>\n<body>\n";
  out << "<h1>" << html_escape(tr.id) << "</h1>\n";
  out << "<p>predicted: <b>" << html_escape(tr.predicted) << "</b> &middot; gold: <b>" << html_escape(tr.gold)
      << "</b> &middot; threshold: " << fixed6(threshold) << "</p>\n";
  out << "<table class=\"legend\">\n";
  for (const char* fam : {"mention", "global", "segment"}) {
    const auto& p = palette_for(fam);
    out << "<tr><th>" << fam << "</th><td>";
    for (int k = 1; k <= 5; ++k) {
      out << "<span class=\"swatch\" style=\"background-color:rgba(" << p.rgb[0] << ',' << p.rgb[1] << ','
          << p.rgb[2] << ',' << fixed6(k / 5.0) << ")\"></span>";
    }
    out << "</td></tr>\n";
  }
  out << "</table>\n<table class=\"heatmap\">\n";
  for (const auto& l : tr.layers) {
    const auto inten = token_intensity(l, tr.tokens.size(), threshold);
    const auto& p = palette_for(l.name);
    out << "<tr data-layer=\"" << html_escape(l.name) << "\" data-window=\"" << l.t << "\"><th>"
        << html_escape(l.name) << "</th><td>";
    for (std::size_t j = 0; j < tr.tokens.size(); ++j) {
      out << "<span class=\"tok\" data-pos=\"" << j << "\" data-weight=\"" << fixed6(l.weights[j]) << "\"";
      if (inten[j] > 0) {
        out << " style=\"background-color:rgba(" << p.rgb[0] << ',' << p.rgb[1] << ',' << p.rgb[2] << ','
            << fixed6(inten[j]) << ")\"";
      }
      out << ">" << html_escape(tr.tokens[j]) << "</span>";
    }
    out << "</td></tr>\n";
  }
  out << "</table>\n</body>\n</html>\n";
  return out.str();
}

}  // namespace

std::string emit_heatmap(const AttentionTrace& trace, const HeatmapOptions& opts) {
  trace.validate();
  const double threshold = opts.threshold < 0 ? default_threshold(trace.tokens.size()) : opts.threshold;
  return opts.format == Format::kHtml ? render_html(trace, threshold)
                                      : render_terminal(trace, threshold, opts.color);
}

std::size_t argmax_position(const std::vector<double>& weights) {
  if (weights.empty()) throw UsageError("argmax of an empty weight vector");
  return static_cast<std::size_t>(std::max_element(weights.begin(), weights.end()) - weights.begin());
}

std::vector<std::size_t> top_positions(const std::vector<double>& weights, std::size_t k) {
  std::vector<std::size_t> idx(weights.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return weights[a] > weights[b]; });
  idx.resize(std::min(k, idx.size()));
  return idx;
}

std::string window_text(const std::vector<std::string>& tokens, std::size_t start, std::size_t t) {
  std::string out;
  for (std::size_t j = start; j < std::min(tokens.size(), start + t); ++j) {
    if (!out.empty()) out += ' ';
    out += tokens[j];
  }
  return out;
}

std::vector<LayerTopK> top_k_report(const std::vector<AttentionTrace>& traces, std::size_t k) {
  if (traces.empty()) throw UsageError("top-k report needs at least one trace");
  if (k == 0) throw UsageError("k must be at least 1");
  std::vector<std::string> order;
  std::map<std::string, std::size_t> slot;
  struct Acc {
    std::vector<std::string> seen1, seenk;
    std::map<std::string, std::size_t> c1, ck;
    std::size_t traces = 0, tied = 0;
  };
  std::vector<Acc> acc;
  for (const auto& tr : traces) {
    tr.validate();
    for (const auto& l : tr.layers) {
      auto [it, fresh] = slot.emplace(l.name, acc.size());
      if (fresh) {
        order.push_back(l.name);
        acc.emplace_back();
      }
      auto& a = acc[it->second];
      a.traces++;
      const auto top1 = argmax_position(l.weights);
      if (std::count(l.weights.begin(), l.weights.end(), l.weights[top1]) > 1) a.tied++;
      const auto text1 = window_text(tr.tokens, top1, l.t);
      if (a.c1[text1]++ == 0) a.seen1.push_back(text1);
      for (auto p : top_positions(l.weights, k)) {
        const auto text = window_text(tr.tokens, p, l.t);
        if (a.ck[text]++ == 0) a.seenk.push_back(text);
      }
    }
  }
  std::vector<LayerTopK> report;
  for (std::size_t i = 0; i < order.size(); ++i) {
    auto& a = acc[i];
    LayerTopK row;
    row.layer = order[i];
    row.tied_traces = a.tied;
    auto build = [&](const std::vector<std::string>& seen, const std::map<std::string, std::size_t>& counts) {
      std::vector<TopKEntry> out;
      for (const auto& s : seen) {
        out.push_back({s, counts.at(s), static_cast<double>(counts.at(s)) / static_cast<double>(a.traces)});
      }
      std::stable_sort(out.begin(), out.end(), [](const auto& x, const auto& y) { return x.count > y.count; });
      return out;
    };
    row.top1 = build(a.seen1, a.c1);
    row.topk = build(a.seenk, a.ck);
    report.push_back(std::move(row));
  }
  return report;
}

json top_k_to_json(const std::vector<LayerTopK>& report) {
  json out = json::array();
  for (const auto& row : report) {
    auto entries = [](const std::vector<TopKEntry>& es) {
      json a = json::array();
      for (const auto& e : es) a.push_back({{"text", e.text}, {"count", e.count}, {"frequency", e.frequency}});
      return a;
    };
    out.push_back({{"layer", row.layer}, {"tied_traces", row.tied_traces}, {"top1", entries(row.top1)},
                   {"topk", entries(row.topk)}});
  }
  return out;
}

std::string top_k_to_text(const std::vector<LayerTopK>& report, std::size_t limit) {
  std::ostringstream out;
  char buf[256];
  for (const auto& row : report) {
    out << row.layer;
    if (row.tied_traces > 0) out << " (" << row.tied_traces << " tied traces, lowest position reported)";
    out << "\n";
    for (std::size_t i = 0; i < std::min(limit, row.top1.size()); ++i) {
      std::snprintf(buf, sizeof buf, "  %-32s %6zu %7.2f%%\n", row.top1[i].text.c_str(), row.top1[i].count,
                    100 * row.top1[i].frequency);
      out << buf;
    }
  }
  return out.str();
}

}  // namespace sms::viz
