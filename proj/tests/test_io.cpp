#include <gtest/gtest.h>

#include <filesystem>

#include "moldsched/io.hpp"
#include "support.hpp"

using namespace moldsched;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir() {
  const fs::path dir = fs::temp_directory_path() / ("moldsched_io_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()));
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST(Io, TaskSetRoundTrip) {
  const TaskSet tasks = generate_taskset(6, 3);
  const auto path = (scratch_dir() / "tasks.json").string();
  io::save_taskset(path, tasks);
  const TaskSet back = io::load_taskset(path);
  ASSERT_EQ(back.size(), tasks.size());
  for (std::size_t j = 0; j < tasks.size(); ++j) {
    EXPECT_EQ(back[j].id, tasks[j].id);
    EXPECT_EQ(back[j].workload, tasks[j].workload);
    EXPECT_EQ(back[j].max_width, tasks[j].max_width);
  }
}

TEST(Io, MachineRoundTrip) {
  const Machine m(4, {0.6, 1.1, 1.6}, {0.3, 1.4, 4.2});
  const auto path = (scratch_dir() / "machine.json").string();
  io::save_machine(path, m);
  const Machine back = io::load_machine(path);
  EXPECT_EQ(back.core_count(), 4);
  EXPECT_EQ(back.freq_table(), m.freq_table());
  EXPECT_EQ(back.power_table(), m.power_table());
}

TEST(Io, MachineWithoutPowerUsesCubicModel) {
  const Machine m = io::machine_from_json(io::json::parse(R"({"cores": 2, "freq_ghz": [1.0, 2.0]})"));
  EXPECT_DOUBLE_EQ(m.power(1), 8.0);
}

TEST(Io, ScheduleRoundTrip) {
  Schedule s;
  s.kind = SchedulerKind::Crown;
  s.deadline = 12.5;
  s.total_energy = 3.0 / 7.0;
  s.entries = {ScheduleEntry{0, {0, 1}, 1, 0.0, 1.0 / 3.0}, ScheduleEntry{4, {1}, 0, 1.0 / 3.0, 2.0}};
  const auto path = (scratch_dir() / "schedule.json").string();
  io::save_schedule(path, s);
  const Schedule back = io::load_schedule(path);
  EXPECT_EQ(back.kind, s.kind);
  EXPECT_EQ(back.deadline, s.deadline);
  EXPECT_EQ(back.total_energy, s.total_energy);
  ASSERT_EQ(back.entries.size(), 2u);
  EXPECT_EQ(back.entries[0].cores, s.entries[0].cores);
  EXPECT_EQ(back.entries[0].end, s.entries[0].end);
  EXPECT_EQ(back.entries[1].task, 4);
}

TEST(Io, Errors) {
  EXPECT_THROW(io::load_taskset((scratch_dir() / "does_not_exist.json").string()), io::FormatError);
  EXPECT_THROW(io::parse_json("{not json", "x"), io::FormatError);
  EXPECT_THROW(io::taskset_from_json(io::json::parse(R"({"jobs": []})")), io::FormatError);
  EXPECT_THROW(io::taskset_from_json(io::json::parse(R"({"tasks": [{"id": 0, "workload": 0, "max_width": 1}]})")),
               io::FormatError);
  EXPECT_THROW(io::taskset_from_json(io::json::parse(
                   R"({"tasks": [{"id": 0, "workload": 3, "max_width": 1}, {"id": 0, "workload": 4, "max_width": 1}]})")),
               io::FormatError);
  EXPECT_THROW(io::taskset_from_json(io::json::parse(R"({"tasks": [{"id": "a", "workload": 3, "max_width": 1}]})")),
               io::FormatError);
  EXPECT_THROW(io::machine_from_json(io::json::parse(R"({"cores": 2, "freq_ghz": [2.0, 1.0]})")), io::FormatError);
  EXPECT_THROW(io::schedule_from_json(io::json::parse(R"({"kind": "fast", "deadline_s": 1, "total_energy_j": 1, "entries": []})")),
               io::FormatError);
}
