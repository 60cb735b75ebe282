#include <iostream>

#include <CLI11.hpp>

#include "cral_cli/commands.hpp"

int main(int argc, char** argv) {
  using namespace cral::cli;

  CLI::App app{"Camera-radar annotation toolkit"};
  app.require_subcommand(1);

  ProjectOptions project;
  auto* p = app.add_subcommand("project", "Project radar (r theta) to pixels or pixels (u v) to radar");
  p->add_option("--direction", project.direction, "r2c or c2r")->check(CLI::IsMember({"r2c", "c2r"}));
  p->add_option("--calibration", project.calibration, "Calibration file");
  p->add_option("--config", project.config, "Pipeline config (its calibration section is used)");
  p->add_option("--input", project.input, "Input file of tuples (default: stdin)");
  p->add_flag("--degrees", project.degrees, "Azimuth in degrees instead of radians");

  CfarOptions cfar;
  auto* c = app.add_subcommand("cfar", "Dump CFAR peaks and clusters of RF frames as JSON lines");
  c->add_option("rf", cfar.rf, "Frame stem, .hdr file or directory of frames")->required();
  c->add_option("--config", cfar.config, "Pipeline config");
  c->add_option("--output", cfar.output, "Output file (default: stdout)");

  AnnotateOptions annotate;
  auto* a = app.add_subcommand("annotate", "Annotate a recorded or synthetic sequence");
  a->add_option("input", annotate.input, "Directory with rf/, camera.jsonl and optionally config.json");
  a->add_option("--rf-dir", annotate.rf_dir, "Directory of RF frames");
  a->add_option("--detections", annotate.detections, "Camera detections file");
  a->add_option("--config", annotate.config, "Pipeline config");
  a->add_option("--output", annotate.output, "Output directory (default: the input directory)");
  a->add_option("--scenario", annotate.scenario, "Scenario label written into each annotation");
  a->add_option("--workers", annotate.workers, "Worker threads")->check(CLI::PositiveNumber);

  ScoreOptions score;
  auto* s = app.add_subcommand("score", "Score point detections against ground truth");
  s->add_option("--detections", score.detections, "Detections / annotations file")->required();
  s->add_option("--ground-truth", score.ground_truth, "Ground-truth file")->required();
  s->add_option("--config", score.config, "Pipeline config (class tolerances, thresholds)");
  s->add_option("--output", score.output, "Write key=value metrics to this file");
  s->add_option("--plot-data", score.plot_data, "Write the threshold sweep table to this file");
  s->add_flag("--per-class", score.per_class, "Add the per-class table");
  s->add_flag("--per-scenario", score.per_scenario, "Add the per-scenario table");

  SynthOptions synth;
  auto* y = app.add_subcommand("synth", "Render a synthetic scene");
  y->add_option("--spec", synth.spec, "Scene spec (default: built-in demo scene)");
  y->add_option("--seed", synth.seed, "Override the scene seed");
  y->add_option("--frames", synth.frames, "Override the frame count");
  y->add_option("--output", synth.output, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kInputError;
  }

  if (*p) return cmd_project(project, std::cin, std::cout, std::cerr);
  if (*c) return cmd_cfar(cfar, std::cout, std::cerr);
  if (*a) return cmd_annotate(annotate, std::cout, std::cerr);
  if (*s) return cmd_score(score, std::cout, std::cerr);
  return cmd_synth(synth, std::cout, std::cerr);
}
