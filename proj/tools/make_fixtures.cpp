// Regenerates the checked-in fixture files under fixtures/ from the builders
// in fixtures.cpp: scene JSONs with embedded oracle reference traces and the
// golden trace line.

#include <filesystem>
#include <iostream>

#include "driveagent/datagen.hpp"
#include "driveagent/fixtures.hpp"

int main(int argc, char** argv) {
  namespace fs = std::filesystem;
  using namespace driveagent;

  std::string root = argc > 1 ? argv[1] : "fixtures";
  fs::create_directories(fs::path(root) / "scenes");
  fs::create_directories(fs::path(root) / "traces");

  for (Scene scene : {fixtures::scene_s0(), fixtures::scene_s1()}) {
    fixtures::attach_reference_traces(scene);
    std::string path = (fs::path(root) / "scenes" / (scene.id + ".json")).string();
    save_scene(scene, path);
    std::cout << "wrote " << path << "\n";
  }

  // golden trace: the oracle's two-step answer to s0-q1
  Scene s0 = fixtures::scene_s0();
  OracleGenerator generator(&Catalog::standard());
  Trace tr0 = generator.propose(s0, s0.qa_items.front(), 1, 0).front();
  std::string path = (fs::path(root) / "traces" / "tr0.jsonl").string();
  write_file(path, serialize_trace(tr0) + "\n");
  std::cout << "wrote " << path << "\n";
  return 0;
}
