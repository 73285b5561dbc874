#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "torusmix/config.hpp"
#include "torusmix/grid.hpp"
#include "torusmix/schedule.hpp"
#include "torusmix/util.hpp"

using namespace torusmix;

TEST_CASE("config: key-value parsing, types, includes") {
  auto dir = std::filesystem::temp_directory_path() / "torusmix_cfg_test";
  std::filesystem::create_directories(dir);
  {
    std::ofstream base(dir / "base.cfg");
    base << "# shared defaults\nN=256\nnu=1e-3\nverbose=true\n";
  }
  {
    std::ofstream main(dir / "main.cfg");
    main << "include base.cfg\nK = 3\nnu = 5e-4\nname = run a\n";
  }
  auto cfg = config::load((dir / "main.cfg").string());
  CHECK(cfg.get_int("N", 0) == 256);
  CHECK(cfg.get_int("K", 0) == 3);
  CHECK(cfg.get_double("nu", 0) == 5e-4);  // later key wins over include
  CHECK(cfg.get_bool("verbose", false));
  CHECK(cfg.get("name") == "run a");
  CHECK(cfg.get("missing", "dflt") == "dflt");

  // canonical render round-trips
  auto again = config::parse(cfg.render());
  CHECK(again.render() == cfg.render());

  CHECK_THROWS(config::parse("no equals sign here"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("tmxf round trip and byte determinism") {
  auto dir = std::filesystem::temp_directory_path() / "torusmix_io_test";
  std::filesystem::create_directories(dir);
  grid::GridField f(32);
  for (size_t i = 0; i < f.values.size(); ++i)
    f.values[i] = std::sin(0.1 * i) * 1e-3 + (i % 7);
  std::string p1 = (dir / "a.tmxf").string();
  std::string p2 = (dir / "b.tmxf").string();
  grid::write_tmxf(p1, f);
  grid::write_tmxf(p2, f);
  auto read_bytes = [](const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)),
                       std::istreambuf_iterator<char>());
  };
  CHECK(util::fnv1a_hex(read_bytes(p1)) == util::fnv1a_hex(read_bytes(p2)));

  auto g = grid::read_tmxf(p1);
  REQUIRE(g.N == f.N);
  for (size_t i = 0; i < f.values.size(); ++i)
    CHECK(g.values[i] == f.values[i]);
  std::filesystem::remove_all(dir);
}

TEST_CASE("schedule CSV content is exact and reproducible") {
  auto render = [] {
    std::string csv;
    for (const auto& e : schedule::generate_schedule_quad_depth(2)) {
      csv += schedule::payload_str(e) + "," + std::to_string(e.start.num) +
             "," + std::to_string(e.start.lden) + "," +
             e.duration.get_num().get_str() + "," +
             e.duration.get_den().get_str() + "\n";
    }
    return csv;
  };
  std::string a = render(), b = render();
  CHECK(a == b);
  CHECK(a.find("(2,1,2,2),6,0,3,4") != std::string::npos);  // first slot at t=6
  CHECK(a.find('.') == std::string::npos);  // integers only, no floats
}
