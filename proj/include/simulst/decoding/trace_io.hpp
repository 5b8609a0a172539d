// Copyright 2026 The simulst Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// JSON-lines trace log: one object per READ/WRITE event followed by a
// summary line per utterance.
//   {"utt":..,"event":"R","frames":..,"g":..,"ms":..}
//   {"utt":..,"event":"W","token":"x","g":..,"ms":..}
//   {"utt":..,"hyp":"..","cost":{"frames_processed":..,"wall_ns":..}}

#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "simulst/decoding/online_decoder.hpp"

namespace simulst::decoding {

inline void write_trace(std::ostream& os, const DecodeTrace& trace) {
  using nlohmann::ordered_json;
  for (const TraceEvent& e : trace.events) {
    ordered_json j;
    j["utt"] = trace.utterance_id;
    if (e.kind == EventKind::kRead) {
      j["event"] = "R";
      j["frames"] = e.frames;
    } else {
      j["event"] = "W";
      j["token"] = std::string(1, e.token);
    }
    j["g"] = e.g;
    j["ms"] = e.ms;
    os << j.dump() << '\n';
  }
  ordered_json fin;
  fin["utt"] = trace.utterance_id;
  fin["hyp"] = trace.hypothesis;
  fin["cost"] = {{"frames_processed", trace.cost.frames_processed_total}, {"wall_ns", trace.wall_ns}};
  os << fin.dump() << '\n';
}

/// Rebuilds traces (events, delays, hypothesis, cost) from a trace log.
inline std::vector<DecodeTrace> read_traces(std::istream& is, double frame_ms = 10.0,
                                            const std::string& source = "<stream>") {
  std::vector<DecodeTrace> out;
  std::map<std::string, DecodeTrace> open;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw IoError(source + ":" + std::to_string(lineno) + ": " + e.what());
    }
    if (!j.contains("utt")) throw IoError(source + ":" + std::to_string(lineno) + ": missing \"utt\"");
    const std::string utt = j["utt"].get<std::string>();
    DecodeTrace& tr = open[utt];
    tr.utterance_id = utt;
    tr.frame_ms = frame_ms;
    if (j.contains("event")) {
      TraceEvent e;
      e.g = j.at("g").get<std::size_t>();
      e.ms = j.at("ms").get<double>();
      if (j["event"] == "R") {
        e.kind = EventKind::kRead;
        e.frames = j.at("frames").get<std::size_t>();
        tr.total_frames = e.g;
      } else {
        e.kind = EventKind::kWrite;
        const std::string tok = j.at("token").get<std::string>();
        e.token = tok.empty() ? '\0' : tok[0];
        tr.delays.push_back(e.g);
      }
      tr.events.push_back(e);
    } else if (j.contains("hyp")) {
      tr.hypothesis = j["hyp"].get<std::string>();
      tr.cost.frames_processed_total = j.at("cost").at("frames_processed").get<std::uint64_t>();
      tr.wall_ns = j.at("cost").at("wall_ns").get<std::uint64_t>();
      out.push_back(std::move(tr));
      open.erase(utt);
    } else {
      throw IoError(source + ":" + std::to_string(lineno) + ": neither an event nor a summary line");
    }
  }
  if (!open.empty()) throw IoError(source + ": trace for '" + open.begin()->first + "' has no summary line");
  return out;
}

}  // namespace simulst::decoding
