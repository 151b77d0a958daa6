#pragma once

// JSON file formats: task sets, machines and schedules.

#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <stdexcept>
#include <string>

#include "moldsched/schedulers.hpp"
#include "moldsched/taskmodel.hpp"

namespace moldsched::io {

using nlohmann::json;

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write '" + path + "'");
  out << text;
  if (!out) throw FormatError("failed writing '" + path + "'");
}

inline json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError("malformed JSON in " + what + ": " + e.what());
  }
}

template <typename T>
T field(const json& j, const char* key, const std::string& what) {
  if (!j.is_object() || !j.contains(key)) throw FormatError(what + ": missing field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw FormatError(what + ": bad field '" + key + "': " + e.what());
  }
}

// Task sets ------------------------------------------------------------------

inline json taskset_to_json(const TaskSet& tasks) {
  json arr = json::array();
  for (const Task& t : tasks) arr.push_back({{"id", t.id}, {"workload", t.workload}, {"max_width", t.max_width}});
  return json{{"tasks", arr}};
}

inline TaskSet taskset_from_json(const json& j) {
  if (!j.is_object() || !j.contains("tasks") || !j["tasks"].is_array())
    throw FormatError("task file: expected an object with a 'tasks' array");
  TaskSet tasks;
  for (const json& t : j["tasks"]) {
    Task task;
    task.id = field<int>(t, "id", "task");
    task.workload = field<std::int64_t>(t, "workload", "task");
    task.max_width = field<int>(t, "max_width", "task");
    if (task.workload < 1) throw FormatError("task " + std::to_string(task.id) + ": workload must be >= 1");
    if (task.max_width < 1) throw FormatError("task " + std::to_string(task.id) + ": max_width must be >= 1");
    for (const Task& other : tasks)
      if (other.id == task.id) throw FormatError("task file: duplicate id " + std::to_string(task.id));
    tasks.push_back(task);
  }
  return tasks;
}

inline TaskSet load_taskset(const std::string& path) { return taskset_from_json(parse_json(read_text(path), path)); }

inline void save_taskset(const std::string& path, const TaskSet& tasks) {
  write_text(path, taskset_to_json(tasks).dump(2) + "\n");
}

// Machines -------------------------------------------------------------------

inline json machine_to_json(const Machine& m) {
  return json{{"cores", m.core_count()}, {"freq_ghz", m.freq_table()}, {"power_w", m.power_table()}};
}

inline Machine machine_from_json(const json& j) {
  const int cores = field<int>(j, "cores", "machine file");
  auto freq = field<std::vector<double>>(j, "freq_ghz", "machine file");
  try {
    if (j.contains("power_w")) {
      auto power = field<std::vector<double>>(j, "power_w", "machine file");
      return Machine(cores, std::move(freq), std::move(power));
    }
    return Machine::with_cubic_power(cores, std::move(freq));
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("machine file: ") + e.what());
  }
}

inline Machine load_machine(const std::string& path) { return machine_from_json(parse_json(read_text(path), path)); }

inline void save_machine(const std::string& path, const Machine& m) {
  write_text(path, machine_to_json(m).dump(2) + "\n");
}

// Schedules ------------------------------------------------------------------

inline json schedule_to_json(const Schedule& s) {
  json entries = json::array();
  for (const ScheduleEntry& e : s.entries)
    entries.push_back({{"task", e.task}, {"cores", e.cores}, {"level", e.level}, {"start_s", e.start}, {"end_s", e.end}});
  return json{{"kind", to_string(s.kind)},
              {"deadline_s", s.deadline},
              {"total_energy_j", s.total_energy},
              {"entries", entries}};
}

inline Schedule schedule_from_json(const json& j) {
  Schedule s;
  try {
    s.kind = scheduler_from_string(field<std::string>(j, "kind", "schedule file"));
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("schedule file: ") + e.what());
  }
  s.deadline = field<double>(j, "deadline_s", "schedule file");
  s.total_energy = field<double>(j, "total_energy_j", "schedule file");
  if (!j.contains("entries") || !j["entries"].is_array()) throw FormatError("schedule file: missing 'entries' array");
  for (const json& e : j["entries"]) {
    ScheduleEntry entry;
    entry.task = field<int>(e, "task", "schedule entry");
    entry.cores = field<std::vector<int>>(e, "cores", "schedule entry");
    entry.level = field<int>(e, "level", "schedule entry");
    entry.start = field<double>(e, "start_s", "schedule entry");
    entry.end = field<double>(e, "end_s", "schedule entry");
    s.entries.push_back(std::move(entry));
  }
  return s;
}

inline Schedule load_schedule(const std::string& path) { return schedule_from_json(parse_json(read_text(path), path)); }

inline void save_schedule(const std::string& path, const Schedule& s) {
  write_text(path, schedule_to_json(s).dump(2) + "\n");
}

}  // namespace moldsched::io
