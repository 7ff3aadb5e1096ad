#pragma once

// Session directory format:
//   meta.txt         key=value: ppg_rate_hz, ppg_channels, acc_rate_hz, acc_channels
//   signals_ppg.csv  time_s,<ppg channel...>
//   signals_acc.csv  time_s,<accel channel...>   (only when accel channels exist)
//   labels.csv       time_s,hr_bpm[,activity]    (optional)

#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "beliefhr/errors.hpp"
#include "beliefhr/frontend.hpp"
#include "beliefhr/text_io.hpp"

namespace beliefhr {

namespace detail {

inline std::vector<std::string> channel_names(const std::string& list) {
  std::vector<std::string> out;
  if (io::trim(list).empty()) return out;
  for (auto n : io::split(list, ',')) {
    if (!n.empty()) out.emplace_back(n);
  }
  return out;
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> columns;
};

inline CsvTable read_csv(const std::filesystem::path& path, std::size_t min_cols, bool allow_text_last = false,
                         std::vector<std::string>* text_last = nullptr) {
  const std::string src = path.string();
  const auto all = io::lines(io::read_file(path));
  if (all.empty()) throw FormatError(src, 1, "missing header row");
  CsvTable t;
  for (auto h : io::split(all[0], ',')) t.header.emplace_back(h);
  const std::size_t cols = t.header.size();
  if (cols < min_cols) throw FormatError(src, 1, "expected at least " + std::to_string(min_cols) + " columns");
  const std::size_t numeric = allow_text_last && cols > min_cols ? cols - 1 : cols;
  t.columns.assign(numeric, {});
  for (std::size_t n = 1; n < all.size(); ++n) {
    if (io::trim(all[n]).empty()) continue;
    const auto f = io::split(all[n], ',');
    if (f.size() != cols) {
      throw FormatError(src, n + 1, "row has " + std::to_string(f.size()) + " fields, header has " +
                                        std::to_string(cols));
    }
    for (std::size_t c = 0; c < numeric; ++c) t.columns[c].push_back(io::parse_double(f[c], src, n + 1));
    if (numeric < cols && text_last) text_last->emplace_back(f[cols - 1]);
  }
  return t;
}

inline double require_rate(const std::map<std::string, std::string>& meta, const std::string& key,
                           const std::string& src) {
  const auto it = meta.find(key);
  if (it == meta.end()) throw ConfigError(src + ": missing key '" + key + "'");
  double v = 0.0;
  if (!io::try_parse_double(it->second, v) || !(v > 0.0))
    throw ConfigError(src + ": key '" + key + "' must be a positive number");
  return v;
}

inline void check_times(const std::vector<double>& times, const std::string& src) {
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (!(times[i] > times[i - 1]))
      throw ValidationError(src + ": time column not strictly increasing at data row " + std::to_string(i + 1));
  }
}

}  // namespace detail

inline RawSession load_session(const std::filesystem::path& dir) {
  const auto meta_path = dir / "meta.txt";
  const auto meta = io::parse_key_values(io::read_file(meta_path), meta_path.string());
  RawSession s;
  s.id = dir.filename().string();
  if (s.id.empty()) s.id = dir.parent_path().filename().string();
  s.ppg_rate = detail::require_rate(meta, "ppg_rate_hz", meta_path.string());
  const auto ppg_it = meta.find("ppg_channels");
  if (ppg_it == meta.end()) throw ConfigError(meta_path.string() + ": missing key 'ppg_channels'");
  const auto ppg_names = detail::channel_names(ppg_it->second);
  if (ppg_names.empty()) throw ConfigError(meta_path.string() + ": 'ppg_channels' lists no channels");
  const auto acc_it = meta.find("acc_channels");
  const auto acc_names = acc_it == meta.end() ? std::vector<std::string>{} : detail::channel_names(acc_it->second);
  if (!acc_names.empty()) s.acc_rate = detail::require_rate(meta, "acc_rate_hz", meta_path.string());

  auto load_signals = [&](const std::filesystem::path& p, const std::vector<std::string>& names, ChannelKind kind) {
    const auto t = detail::read_csv(p, 1 + names.size());
    if (t.header.size() != 1 + names.size()) {
      throw FormatError(p.string(), 1, "header has " + std::to_string(t.header.size() - 1) +
                                           " channels, meta.txt lists " + std::to_string(names.size()));
    }
    detail::check_times(t.columns[0], p.string());
    if (kind == ChannelKind::kPpg && !t.columns[0].empty()) s.start_time = t.columns[0].front();
    for (std::size_t c = 0; c < names.size(); ++c) s.channels.push_back({names[c], kind, t.columns[c + 1]});
  };
  load_signals(dir / "signals_ppg.csv", ppg_names, ChannelKind::kPpg);
  if (!acc_names.empty()) load_signals(dir / "signals_acc.csv", acc_names, ChannelKind::kAccel);

  const auto labels_path = dir / "labels.csv";
  if (std::filesystem::exists(labels_path)) {
    std::vector<std::string> tags;
    const auto t = detail::read_csv(labels_path, 2, true, &tags);
    for (std::size_t i = 0; i < t.columns[0].size(); ++i)
      s.labels.push_back({t.columns[0][i], t.columns[1][i], i < tags.size() ? tags[i] : std::string{}});
  }
  s.validate();
  return s;
}

namespace detail {

inline void write_signals(const std::filesystem::path& p, const RawSession& s, ChannelKind kind, double rate) {
  const auto chans = s.of_kind(kind);
  std::ofstream out(p, std::ios::binary);
  if (!out) throw FormatError(p.string(), 0, "cannot open for writing");
  out << "time_s";
  for (const auto* c : chans) out << ',' << c->name;
  out << '\n';
  const std::size_t n = chans.empty() ? 0 : chans.front()->samples.size();
  for (std::size_t k = 0; k < n; ++k) {
    out << io::format_double(s.start_time + static_cast<double>(k) / rate, 12);
    for (const auto* c : chans) out << ',' << io::format_double(c->samples[k], 10);
    out << '\n';
  }
  if (!out) throw FormatError(p.string(), 0, "write failed");
}

}  // namespace detail

/// Writes a session directory. Files go to `<dir>.tmp` first, which replaces `dir` on success.
inline void save_session(const RawSession& s, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  const fs::path tmp = dir.string() + ".tmp";
  fs::remove_all(tmp);
  fs::create_directories(tmp);
  try {
    const auto ppg = s.of_kind(ChannelKind::kPpg);
    const auto acc = s.of_kind(ChannelKind::kAccel);
    auto join = [](const std::vector<const Channel*>& cs) {
      std::string out;
      for (const auto* c : cs) out += (out.empty() ? "" : ",") + c->name;
      return out;
    };
    std::string meta = "ppg_rate_hz=" + io::format_double(s.ppg_rate) + "\n";
    meta += "ppg_channels=" + join(ppg) + "\n";
    if (!acc.empty()) {
      meta += "acc_rate_hz=" + io::format_double(s.acc_rate) + "\n";
      meta += "acc_channels=" + join(acc) + "\n";
    }
    {
      std::ofstream out(tmp / "meta.txt", std::ios::binary);
      out << meta;
    }
    detail::write_signals(tmp / "signals_ppg.csv", s, ChannelKind::kPpg, s.ppg_rate);
    if (!acc.empty()) detail::write_signals(tmp / "signals_acc.csv", s, ChannelKind::kAccel, s.acc_rate);
    if (!s.labels.empty()) {
      bool tagged = false;
      for (const auto& l : s.labels) tagged = tagged || !l.tag.empty();
      std::ofstream out(tmp / "labels.csv", std::ios::binary);
      out << (tagged ? "time_s,hr_bpm,activity\n" : "time_s,hr_bpm\n");
      for (const auto& l : s.labels) {
        out << io::format_double(l.time, 12) << ',' << io::format_double(l.bpm, 12);
        if (tagged) out << ',' << l.tag;
        out << '\n';
      }
    }
    fs::remove_all(dir);
    fs::rename(tmp, dir);
  } catch (...) {
    std::error_code ec;
    fs::remove_all(tmp, ec);
    throw;
  }
}

}  // namespace beliefhr
