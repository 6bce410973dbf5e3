// mop/io_formats.hpp

// Copyright 2026 The mop Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

// Line-oriented text formats for sequences (templates and clips) and
// trained models. See docs/formats.md for the byte-level layout. Numbers are
// written as the shortest decimal that reads back to the same double.

#ifndef MOP_IO_FORMATS_HPP_
#define MOP_IO_FORMATS_HPP_

#include <charconv>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <system_error>
#include <variant>
#include <vector>

#include "mop/core.hpp"
#include "mop/training.hpp"

namespace mop::io {

inline constexpr int kFormatVersion = 1;
inline constexpr std::string_view kSequenceMagic = "mop-sequence";
inline constexpr std::string_view kModelMagic = "mop-model";

/// Shortest round-trippable decimal form of `v`.
inline std::string FormatNumber(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline std::string FormatNumber(std::size_t v) { return std::to_string(v); }

inline std::vector<std::string_view> SplitFields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

namespace detail {

inline bool IsToken(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s)
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == ':')
      return false;
  return true;
}

inline void RequireToken(std::string_view s, const std::string &what) {
  if (!IsToken(s))
    throw InvariantError(what + " '" + std::string(s) +
                         "' must be a non-empty token without whitespace or ':'");
}

class LineReader {
 public:
  explicit LineReader(std::string_view text) : text_(text) {}

  // Next non-empty line; nullopt at end of input.
  std::optional<std::string_view> next() {
    while (pos_ < text_.size()) {
      std::size_t end = text_.find('\n', pos_);
      if (end == std::string_view::npos) end = text_.size();
      std::string_view line = text_.substr(pos_, end - pos_);
      pos_ = end + 1;
      ++line_no_;
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
      return line;
    }
    return std::nullopt;
  }
  std::size_t line() const { return line_no_; }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_no_ = 0;
};

inline double ParseDouble(std::string_view s, std::size_t line,
                          std::size_t field) {
  double v = 0.0;
  const char *first = s.data();
  const char *last = s.data() + s.size();
  if (!s.empty() && s[0] == '+') ++first;
  auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last)
    throw ParseError(line, field, "'" + std::string(s) + "' is not a number");
  if (!std::isfinite(v))
    throw ParseError(line, field, "non-finite value '" + std::string(s) + "'");
  return v;
}

inline std::size_t ParseCount(std::string_view s, std::size_t line,
                              std::size_t field) {
  std::size_t v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw ParseError(line, field,
                     "'" + std::string(s) + "' is not a non-negative integer");
  return v;
}

struct HeaderLine {
  std::size_t line = 0;
  std::vector<std::string_view> fields;  // excluding the key
};

// Reads "<magic> <version>", then key/value lines up to "data".
inline std::map<std::string, HeaderLine> ReadHeader(LineReader &rd,
                                                    std::string_view magic) {
  auto first = rd.next();
  if (!first) throw ParseError(1, 0, "empty input");
  auto f = SplitFields(*first);
  if (f.size() != 2 || f[0] != magic)
    throw ParseError(rd.line(), 1,
                     "expected '" + std::string(magic) + " <version>'");
  const std::size_t version = ParseCount(f[1], rd.line(), 2);
  if (version != static_cast<std::size_t>(kFormatVersion))
    throw VersionError("unsupported " + std::string(magic) + " version " +
                       std::string(f[1]));

  std::map<std::string, HeaderLine> header;
  while (true) {
    auto line = rd.next();
    if (!line) throw ParseError(rd.line(), 0, "missing 'data' line");
    auto fields = SplitFields(*line);
    if (fields[0] == "data") {
      if (fields.size() != 1)
        throw ParseError(rd.line(), 2, "'data' takes no value");
      break;
    }
    std::string key(fields[0]);
    if (header.count(key))
      throw ParseError(rd.line(), 1, "duplicate header key '" + key + "'");
    HeaderLine h{rd.line(), {fields.begin() + 1, fields.end()}};
    header.emplace(std::move(key), std::move(h));
  }
  return header;
}

inline const HeaderLine &Require(const std::map<std::string, HeaderLine> &h,
                                 const std::string &key, std::size_t line) {
  auto it = h.find(key);
  if (it == h.end())
    throw ParseError(line, 0, "missing header key '" + key + "'");
  return it->second;
}

inline std::string_view Single(const HeaderLine &h, const std::string &key) {
  if (h.fields.size() != 1)
    throw ParseError(h.line, 2, "'" + key + "' takes exactly one value");
  return h.fields[0];
}

inline void CheckKeys(const std::map<std::string, HeaderLine> &h,
                      std::initializer_list<std::string_view> allowed) {
  for (const auto &[key, line] : h) {
    bool ok = false;
    for (auto a : allowed) ok = ok || key == a;
    if (!ok) throw ParseError(line.line, 1, "unknown header key '" + key + "'");
  }
}

inline void AppendRecord(std::string &out, std::span<const double> values) {
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (k) out += ' ';
    out += FormatNumber(values[k]);
  }
  out += '\n';
}

inline std::string_view KindName(ChannelKind k) {
  return k == ChannelKind::kBlend ? "blend" : "joint";
}

inline std::string_view PriorName(PriorMode m) {
  return m == PriorMode::kUniformFirstWindow ? "uniform_first_window"
                                             : "start_state";
}

}  // namespace detail

enum class SequenceKind { kAction, kMotion };

using Sequence = std::variant<ActionTemplate, MotionClip>;

inline std::string save_sequence(const ActionTemplate &tpl) {
  validate_template(tpl);
  detail::RequireToken(tpl.id, "id");
  std::string out;
  out += std::string(kSequenceMagic) + " " + std::to_string(kFormatVersion) + "\n";
  out += "id " + tpl.id + "\n";
  out += "kind action\n";
  out += "rate " + FormatNumber(tpl.rate) + "\n";
  out += "d " + FormatNumber(tpl.dims()) + "\n";
  if (!tpl.layout.empty()) {
    out += "layout";
    for (const auto &s : tpl.layout) {
      detail::RequireToken(s.id, "source id");
      out += " " + s.id + ":" + FormatNumber(s.dims);
    }
    out += "\n";
  }
  if (!tpl.channel_names.empty()) {
    out += "channels";
    for (const auto &c : tpl.channel_names) {
      detail::RequireToken(c, "channel name");
      out += " " + c;
    }
    out += "\n";
  }
  out += "frames " + FormatNumber(tpl.length()) + "\n";
  out += "data\n";
  std::vector<double> rec;
  for (const Frame &f : tpl.frames) {
    rec.assign(1, f.t);
    rec.insert(rec.end(), f.features.begin(), f.features.end());
    detail::AppendRecord(out, rec);
  }
  return out;
}

inline std::string save_sequence(const MotionClip &clip) {
  validate_clip(clip);
  detail::RequireToken(clip.id, "id");
  std::string out;
  out += std::string(kSequenceMagic) + " " + std::to_string(kFormatVersion) + "\n";
  out += "id " + clip.id + "\n";
  out += "kind motion\n";
  out += "rate " + FormatNumber(clip.rate) + "\n";
  out += "d " + FormatNumber(clip.channels.size()) + "\n";
  out += "channels";
  for (const auto &c : clip.channels) {
    detail::RequireToken(c.name, "channel name");
    out += " " + c.name;
  }
  out += "\nkinds";
  for (const auto &c : clip.channels)
    out += " " + std::string(detail::KindName(c.kind));
  out += "\n";
  out += "frames " + FormatNumber(clip.length()) + "\n";
  out += "data\n";
  std::vector<double> rec;
  for (const Frame &f : clip.frames) {
    rec.assign(1, f.t);
    rec.insert(rec.end(), f.features.begin(), f.features.end());
    detail::AppendRecord(out, rec);
  }
  return out;
}

inline std::string save_sequence(const Sequence &seq) {
  return std::visit([](const auto &s) { return save_sequence(s); }, seq);
}

/// Parses a sequence file; the `kind` header selects the returned
/// alternative. The result satisfies every invariant of its type.
inline Sequence load_sequence(std::string_view text) {
  detail::LineReader rd(text);
  auto header = detail::ReadHeader(rd, kSequenceMagic);
  const std::size_t data_line = rd.line();
  detail::CheckKeys(header,
                    {"id", "kind", "rate", "d", "layout", "channels", "kinds",
                     "frames"});

  const auto &id_h = detail::Require(header, "id", data_line);
  const std::string id(detail::Single(id_h, "id"));
  const auto &kind_h = detail::Require(header, "kind", data_line);
  const std::string_view kind_s = detail::Single(kind_h, "kind");
  SequenceKind kind;
  if (kind_s == "action") {
    kind = SequenceKind::kAction;
  } else if (kind_s == "motion") {
    kind = SequenceKind::kMotion;
  } else {
    throw ParseError(kind_h.line, 2, "kind must be 'action' or 'motion'");
  }
  const auto &rate_h = detail::Require(header, "rate", data_line);
  const double rate =
      detail::ParseDouble(detail::Single(rate_h, "rate"), rate_h.line, 2);
  const auto &d_h = detail::Require(header, "d", data_line);
  const std::size_t d = detail::ParseCount(detail::Single(d_h, "d"), d_h.line, 2);
  if (d == 0) throw ParseError(d_h.line, 2, "d must be >= 1");
  const auto &n_h = detail::Require(header, "frames", data_line);
  const std::size_t count =
      detail::ParseCount(detail::Single(n_h, "frames"), n_h.line, 2);

  SourceLayout layout;
  if (auto it = header.find("layout"); it != header.end()) {
    if (kind == SequenceKind::kMotion)
      throw ParseError(it->second.line, 1, "'layout' is only valid for action");
    for (std::size_t i = 0; i < it->second.fields.size(); ++i) {
      std::string_view tok = it->second.fields[i];
      const auto colon = tok.rfind(':');
      if (colon == std::string_view::npos || colon == 0)
        throw ParseError(it->second.line, i + 2, "expected '<source>:<dims>'");
      layout.push_back({std::string(tok.substr(0, colon)),
                        detail::ParseCount(tok.substr(colon + 1),
                                           it->second.line, i + 2)});
    }
    if (layout.empty()) throw ParseError(it->second.line, 2, "empty layout");
  }
  std::vector<std::string> channels;
  if (auto it = header.find("channels"); it != header.end()) {
    if (it->second.fields.size() != d)
      throw ParseError(it->second.line, 0,
                       "expected " + std::to_string(d) + " channel names");
    for (auto f : it->second.fields) channels.emplace_back(f);
  }
  std::vector<ChannelKind> kinds;
  if (auto it = header.find("kinds"); it != header.end()) {
    if (kind == SequenceKind::kAction)
      throw ParseError(it->second.line, 1, "'kinds' is only valid for motion");
    if (it->second.fields.size() != d)
      throw ParseError(it->second.line, 0,
                       "expected " + std::to_string(d) + " channel kinds");
    for (std::size_t i = 0; i < d; ++i) {
      const auto f = it->second.fields[i];
      if (f == "joint") {
        kinds.push_back(ChannelKind::kJoint);
      } else if (f == "blend") {
        kinds.push_back(ChannelKind::kBlend);
      } else {
        throw ParseError(it->second.line, i + 2, "kind must be joint|blend");
      }
    }
  }
  if (kind == SequenceKind::kMotion && (channels.empty() || kinds.empty()))
    throw ParseError(data_line, 0, "motion sequences need 'channels' and 'kinds'");

  std::vector<Frame> frames;
  frames.reserve(count);
  while (auto line = rd.next()) {
    auto fields = SplitFields(*line);
    if (fields.size() != d + 1)
      throw ParseError(rd.line(), std::min(fields.size(), d + 1) + 1,
                       "record has " + std::to_string(fields.size()) +
                           " fields, expected " + std::to_string(d + 1));
    Frame f;
    f.t = detail::ParseDouble(fields[0], rd.line(), 1);
    f.features.resize(d);
    for (std::size_t k = 0; k < d; ++k)
      f.features[k] = detail::ParseDouble(fields[k + 1], rd.line(), k + 2);
    frames.push_back(std::move(f));
  }
  if (frames.size() != count)
    throw ParseError(rd.line(), 0,
                     "header declares " + std::to_string(count) +
                         " frames, body has " + std::to_string(frames.size()));

  try {
    if (kind == SequenceKind::kAction) {
      ActionTemplate tpl{id, std::move(frames), rate, std::move(layout),
                         std::move(channels)};
      validate_template(tpl);
      return tpl;
    }
    MotionClip clip;
    clip.id = id;
    clip.rate = rate;
    clip.frames = std::move(frames);
    for (std::size_t i = 0; i < d; ++i)
      clip.channels.push_back({channels[i], kinds[i]});
    validate_clip(clip);
    return clip;
  } catch (const ParseError &) {
    throw;
  } catch (const Error &e) {
    throw InvariantError(std::string("sequence '") + id + "': " + e.what());
  }
}

inline ActionTemplate load_template(std::string_view text) {
  Sequence s = load_sequence(text);
  if (auto *t = std::get_if<ActionTemplate>(&s)) return std::move(*t);
  throw InvariantError("expected an action sequence, found motion");
}

inline MotionClip load_clip(std::string_view text) {
  Sequence s = load_sequence(text);
  if (auto *c = std::get_if<MotionClip>(&s)) return std::move(*c);
  throw InvariantError("expected a motion sequence, found action");
}

inline std::string save_model(const FollowerModel &m) {
  validate_model(m);
  detail::RequireToken(m.id, "id");
  if (m.prior != MakePrior(m.prior_mode, m.num_states(), m.half_window))
    throw InvariantError("model '" + m.id +
                         "': prior is not reproducible from prior_mode");
  std::string out;
  out += std::string(kModelMagic) + " " + std::to_string(kFormatVersion) + "\n";
  out += "id " + m.id + "\n";
  out += "N " + FormatNumber(m.num_states()) + "\n";
  out += "d " + FormatNumber(m.dims()) + "\n";
  out += "rate " + FormatNumber(m.rate) + "\n";
  out += "sigma2 " + FormatNumber(m.sigma2) + "\n";
  out += "a_self " + FormatNumber(m.a_self) + "\n";
  out += "a_next " + FormatNumber(m.a_next) + "\n";
  out += "p " + FormatNumber(m.half_window) + "\n";
  out += "prior_mode " + std::string(detail::PriorName(m.prior_mode)) + "\n";
  if (m.standardized()) {
    out += "offset ";
    detail::AppendRecord(out, m.feature_offset);
    out += "scale ";
    detail::AppendRecord(out, m.feature_scale);
  }
  out += "data\n";
  for (const auto &s : m.states) detail::AppendRecord(out, s);
  return out;
}

inline FollowerModel load_model(std::string_view text) {
  detail::LineReader rd(text);
  auto header = detail::ReadHeader(rd, kModelMagic);
  const std::size_t data_line = rd.line();
  detail::CheckKeys(header, {"id", "N", "d", "rate", "sigma2", "a_self",
                             "a_next", "p", "prior_mode", "offset", "scale"});
  auto num = [&](const char *key) {
    const auto &h = detail::Require(header, key, data_line);
    return detail::ParseDouble(detail::Single(h, key), h.line, 2);
  };
  auto count = [&](const char *key) {
    const auto &h = detail::Require(header, key, data_line);
    return detail::ParseCount(detail::Single(h, key), h.line, 2);
  };

  FollowerModel m;
  m.id = std::string(detail::Single(detail::Require(header, "id", data_line), "id"));
  const std::size_t n = count("N");
  const std::size_t d = count("d");
  m.rate = num("rate");
  m.sigma2 = num("sigma2");
  m.a_self = num("a_self");
  m.a_next = num("a_next");
  m.half_window = count("p");
  const auto &pm = detail::Require(header, "prior_mode", data_line);
  const auto pm_s = detail::Single(pm, "prior_mode");
  if (pm_s == "start_state") {
    m.prior_mode = PriorMode::kStartState;
  } else if (pm_s == "uniform_first_window") {
    m.prior_mode = PriorMode::kUniformFirstWindow;
  } else {
    throw ParseError(pm.line, 2, "unknown prior_mode");
  }
  if (n < 2) throw InvariantError("model '" + m.id + "': N must be >= 2");
  if (d < 1) throw InvariantError("model '" + m.id + "': d must be >= 1");
  if (m.half_window < 1 || m.half_window > n)
    throw InvariantError("model '" + m.id + "': p outside [1, N]");

  auto vec = [&](const char *key) {
    std::vector<double> v;
    auto it = header.find(key);
    if (it == header.end()) return v;
    if (it->second.fields.size() != d)
      throw ParseError(it->second.line, 0,
                       std::string(key) + " needs " + std::to_string(d) +
                           " values");
    for (std::size_t k = 0; k < d; ++k)
      v.push_back(detail::ParseDouble(it->second.fields[k], it->second.line,
                                      k + 2));
    return v;
  };
  m.feature_offset = vec("offset");
  m.feature_scale = vec("scale");

  m.states.reserve(n);
  while (auto line = rd.next()) {
    auto fields = SplitFields(*line);
    if (fields.size() != d)
      throw ParseError(rd.line(), std::min(fields.size(), d) + 1,
                       "state record has " + std::to_string(fields.size()) +
                           " fields, expected " + std::to_string(d));
    std::vector<double> s(d);
    for (std::size_t k = 0; k < d; ++k)
      s[k] = detail::ParseDouble(fields[k], rd.line(), k + 1);
    m.states.push_back(std::move(s));
  }
  if (m.states.size() != n)
    throw ParseError(rd.line(), 0,
                     "header declares N=" + std::to_string(n) + ", body has " +
                         std::to_string(m.states.size()) + " states");
  m.prior = MakePrior(m.prior_mode, n, m.half_window);
  validate_model(m);
  return m;
}

}  // namespace mop::io

#endif  // MOP_IO_FORMATS_HPP_
