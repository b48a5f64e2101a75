#pragma once

#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace wst {

enum class Region { Keyboard = 0, SuggList = 1, InputField = 2 };

inline const char* to_string(Region r) {
  switch (r) {
    case Region::Keyboard: return "keyboard";
    case Region::SuggList: return "sugg_list";
    case Region::InputField: return "input_field";
  }
  return "?";
}

inline Region region_from_string(std::string_view s) {
  if (s == "keyboard") return Region::Keyboard;
  if (s == "sugg_list") return Region::SuggList;
  if (s == "input_field") return Region::InputField;
  throw std::runtime_error("unknown region: " + std::string(s));
}

enum class EventKind { GazeEnter, Keystroke, Backspace, Pick, Commit, AutocorrectFired };

inline const char* to_string(EventKind k) {
  switch (k) {
    case EventKind::GazeEnter: return "gaze_enter";
    case EventKind::Keystroke: return "keystroke";
    case EventKind::Backspace: return "backspace";
    case EventKind::Pick: return "pick";
    case EventKind::Commit: return "commit";
    case EventKind::AutocorrectFired: return "autocorrect_fired";
  }
  return "?";
}

inline EventKind event_kind_from_string(std::string_view s) {
  if (s == "gaze_enter") return EventKind::GazeEnter;
  if (s == "keystroke") return EventKind::Keystroke;
  if (s == "backspace") return EventKind::Backspace;
  if (s == "pick") return EventKind::Pick;
  if (s == "commit") return EventKind::Commit;
  if (s == "autocorrect_fired") return EventKind::AutocorrectFired;
  throw std::runtime_error("unknown event kind: " + std::string(s));
}

// One logged action. `t_s` is the simulated clock after the action completed
// and `dur_s` the time the action consumed, so the clock can be replayed by
// summing durations.
struct Event {
  EventKind kind;
  double t_s = 0.0;
  double dur_s = 0.0;
  Region region = Region::Keyboard;  // GazeEnter
  std::string text;                  // Keystroke: char; Pick: picked word; Commit: final text
  bool error = false;                // Keystroke: erroneous character
  bool skip = false;                 // Keystroke: capital skipped via NoAct
  bool empty = false;                // Backspace on an empty buffer
  bool deleted_correct = false;      // Backspace removed a correct character
};

enum class Terminal { Commit, Pick, StepLimit };

inline const char* to_string(Terminal t) {
  switch (t) {
    case Terminal::Commit: return "commit";
    case Terminal::Pick: return "pick";
    case Terminal::StepLimit: return "step_limit";
  }
  return "?";
}

inline Terminal terminal_from_string(std::string_view s) {
  if (s == "commit") return Terminal::Commit;
  if (s == "pick") return Terminal::Pick;
  if (s == "step_limit") return Terminal::StepLimit;
  throw std::runtime_error("unknown terminal: " + std::string(s));
}

// Per-word event log, the substrate every benchmark metric is computed from.
struct TypingRecord {
  std::string target;
  std::string final;
  Terminal terminal = Terminal::Commit;
  Region sugg_region = Region::SuggList;  // region that reveals suggestions
  double elapsed_s = 0.0;
  std::vector<Event> events;
};

// ---- JSONL serialization: one event object per line, episodes delimited by
// "begin"/"end" records.

inline void append_jsonl(std::ostream& out, const TypingRecord& rec) {
  using nlohmann::json;
  out << json{{"kind", "begin"},
              {"t_s", 0.0},
              {"payload", {{"target", rec.target}, {"sugg_region", to_string(rec.sugg_region)}}}}
             .dump()
      << "\n";
  for (const Event& e : rec.events) {
    json payload{{"dur_s", e.dur_s}};
    switch (e.kind) {
      case EventKind::GazeEnter:
        payload["region"] = to_string(e.region);
        break;
      case EventKind::Keystroke:
        payload["char"] = e.text;
        payload["error"] = e.error;
        if (e.skip) payload["skip"] = true;
        break;
      case EventKind::Backspace:
        payload["empty"] = e.empty;
        payload["deleted_correct"] = e.deleted_correct;
        break;
      case EventKind::Pick:
      case EventKind::Commit:
      case EventKind::AutocorrectFired:
        payload["text"] = e.text;
        break;
    }
    out << json{{"kind", to_string(e.kind)}, {"t_s", e.t_s}, {"payload", payload}}.dump() << "\n";
  }
  out << json{{"kind", "end"},
              {"t_s", rec.elapsed_s},
              {"payload", {{"final", rec.final}, {"terminal", to_string(rec.terminal)}}}}
             .dump()
      << "\n";
}

inline void write_jsonl(const std::string& path, const std::vector<TypingRecord>& records) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write log: " + path);
  for (const auto& r : records) append_jsonl(out, r);
}

inline std::vector<TypingRecord> read_jsonl(std::istream& in) {
  using nlohmann::json;
  std::vector<TypingRecord> records;
  std::optional<TypingRecord> cur;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j = json::parse(line);
    const std::string kind = j.at("kind");
    const json& payload = j.at("payload");
    if (kind == "begin") {
      if (cur) throw std::runtime_error("jsonl: nested begin at line " + std::to_string(lineno));
      cur.emplace();
      cur->target = payload.at("target");
      cur->sugg_region = region_from_string(payload.value("sugg_region", "sugg_list"));
      continue;
    }
    if (!cur) throw std::runtime_error("jsonl: event before begin at line " + std::to_string(lineno));
    if (kind == "end") {
      cur->final = payload.at("final");
      cur->terminal = terminal_from_string(payload.at("terminal").get<std::string>());
      cur->elapsed_s = j.at("t_s");
      records.push_back(std::move(*cur));
      cur.reset();
      continue;
    }
    Event e;
    e.kind = event_kind_from_string(kind);
    e.t_s = j.at("t_s");
    e.dur_s = payload.value("dur_s", 0.0);
    switch (e.kind) {
      case EventKind::GazeEnter:
        e.region = region_from_string(payload.at("region").get<std::string>());
        break;
      case EventKind::Keystroke:
        e.text = payload.at("char");
        e.error = payload.value("error", false);
        e.skip = payload.value("skip", false);
        break;
      case EventKind::Backspace:
        e.empty = payload.value("empty", false);
        e.deleted_correct = payload.value("deleted_correct", false);
        break;
      default:
        e.text = payload.value("text", "");
        break;
    }
    cur->events.push_back(std::move(e));
  }
  if (cur) throw std::runtime_error("jsonl: unterminated episode");
  return records;
}

inline std::vector<TypingRecord> read_jsonl_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open log: " + path);
  return read_jsonl(in);
}

}  // namespace wst
