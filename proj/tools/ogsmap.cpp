// Command-line front end: synthetic dataset generation, the full mapping
// pipeline, offline rendering, scene manipulation, single-step consensus
// debugging, and a render throughput benchmark.

#include <CLI11.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "ogs/io.hpp"
#include "ogs/pipeline.hpp"

namespace {

struct SynthFlags {
  ogs::SyntheticSceneSpec scene;
  ogs::PerturbationSpec perturbation;
  std::uint32_t seed = 0;
};

void add_scene_flags(CLI::App& cmd, SynthFlags& f) {
  cmd.add_option("--objects", f.scene.object_count, "Object count");
  cmd.add_option("--per-object", f.scene.gaussians_per_object, "Gaussians per object");
  cmd.add_option("--frames", f.scene.frames, "Trajectory length");
  cmd.add_option("--width", f.scene.intrinsics.width, "Image width");
  cmd.add_option("--height", f.scene.intrinsics.height, "Image height");
  cmd.add_option("--opacity", f.scene.opacity, "Gaussian opacity");
  cmd.add_option("--object-size", f.scene.object_size, "Object half-extent, world units");
  cmd.add_option("--ring-radius", f.scene.ring_radius, "Object ring radius");
  cmd.add_option("--orbit-radius", f.scene.orbit_radius, "Camera orbit radius");
  cmd.add_option("--orbit-span", f.scene.orbit_span, "Trajectory azimuth sweep, radians");
  cmd.add_option("--oversegment", f.perturbation.oversegment_prob, "Per-object split probability");
  cmd.add_option("--merge-prob", f.perturbation.merge_prob, "Per-frame merge probability");
  cmd.add_option("--conf-noise", f.perturbation.confidence_noise, "Confidence noise amplitude");
  cmd.add_option("--conf-base", f.perturbation.confidence_base, "Confidence base value");
  cmd.add_option("--seed", f.seed, "RNG seed");
}

// Keep the synthetic camera's field of view fixed under --width/--height.
void finalize_intrinsics(SynthFlags& f) {
  auto& intr = f.scene.intrinsics;
  intr.fx = intr.fy = 0.75f * static_cast<float>(intr.width);
  intr.cx = 0.5f * static_cast<float>(intr.width);
  intr.cy = 0.5f * static_cast<float>(intr.height);
}

ogs::CameraIntrinsics load_intrinsics(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error(path + ": cannot open for reading");
  ogs::CameraIntrinsics intr;
  if (!(is >> intr.fx >> intr.fy >> intr.cx >> intr.cy >> intr.width >> intr.height)) {
    throw std::runtime_error(path + ": bad intrinsics file");
  }
  return intr;
}

const char* kind_name(ogs::MatchKind kind) {
  switch (kind) {
    case ogs::MatchKind::FullMatch: return "full";
    case ogs::MatchKind::PartOf: return "part";
    case ogs::MatchKind::WholeOf: return "whole";
    case ogs::MatchKind::New: return "new";
    case ogs::MatchKind::Background: return "background";
  }
  return "?";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Label-carrying Gaussian splatting mapper"};
  app.require_subcommand(1);

  // --- synth ---------------------------------------------------------------
  auto* synth = app.add_subcommand("synth", "Emit a synthetic recorded dataset");
  SynthFlags synth_flags;
  std::string synth_out;
  add_scene_flags(*synth, synth_flags);
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->callback([&] {
    finalize_intrinsics(synth_flags);
    synth_flags.perturbation.seed = synth_flags.seed;
    const ogs::SyntheticDataset dataset =
        ogs::generate_synthetic(synth_flags.scene, synth_flags.seed);
    ogs::write_dataset(dataset, synth_flags.perturbation, synth_flags.scene.intrinsics, synth_out);
    std::cout << "wrote " << dataset.trajectory.size() << " frames to " << synth_out << "\n";
  });

  // --- run -----------------------------------------------------------------
  auto* run = app.add_subcommand("run", "Run the full mapping pipeline");
  ogs::RunConfig config;
  SynthFlags run_flags;
  add_scene_flags(*run, run_flags);
  run->add_option("--tau1", config.params.thresholds.tau1, "Full-match overlap threshold");
  run->add_option("--tau2", config.params.thresholds.tau2, "Part-match overlap threshold");
  run->add_option("--tau3", config.params.thresholds.tau3, "New-object overlap ceiling");
  run->add_option("--delta", config.params.delta, "Part label confidence decay");
  run->add_option("--theta", config.params.theta, "Counter pruning scale threshold");
  run->add_option("--topk", config.params.top_k, "Per-pixel contributor record size");
  run->add_option("--keyframe-every", config.params.keyframe_every, "Densification period");
  run->add_option("--densify-stride", config.params.densify.stride, "Densification grid step");
  run->add_option("--depth-threshold", config.params.densify.depth_threshold,
                  "Densification depth gap, world units");
  run->add_option("--max-labels", config.params.max_labels, "Label budget");
  run->add_option("--data", config.data_dir, "Recorded dataset directory");
  run->add_option("--out", config.output_dir, "Output directory (scene/metrics/table)");
  auto* no_update = run->add_flag("--no-confidence-update", "Disable input confidence update");
  run->callback([&] {
    finalize_intrinsics(run_flags);
    config.seed = run_flags.seed;
    config.scene_spec = run_flags.scene;
    config.perturbation = run_flags.perturbation;
    config.perturbation.seed = run_flags.seed;
    config.params.input_confidence_update = no_update->count() == 0;
    const ogs::RunMetrics metrics = ogs::run_pipeline(config);
    std::cout << "frames " << metrics.frame_miou.size() << "\n";
    std::cout << "final_miou " << metrics.final_miou << "\n";
    std::cout << "final_acc " << metrics.final_acc << "\n";
    std::cout << "final_label_count " << metrics.final_label_count << "\n";
    std::cout << "total_overwrites " << metrics.total_overwrites << "\n";
  });

  // --- render --------------------------------------------------------------
  auto* render = app.add_subcommand("render", "Render a scene from a trajectory pose");
  std::string render_scene, render_traj, render_intr, render_out;
  int render_frame = 0;
  render->add_option("--scene", render_scene, "Scene file (OGS1)")->required();
  render->add_option("--trajectory", render_traj, "Trajectory file")->required();
  render->add_option("--frame", render_frame, "Trajectory line index");
  render->add_option("--intrinsics", render_intr, "Intrinsics file: fx fy cx cy width height")
      ->required();
  render->add_option("--out", render_out, "Output prefix (.ppm/_depth.ogdm/_labels.oglm)")
      ->required();
  render->callback([&] {
    const ogs::GaussianScene scene = ogs::read_scene(render_scene);
    const auto trajectory = ogs::read_trajectory(render_traj);
    if (render_frame < 0 || static_cast<std::size_t>(render_frame) >= trajectory.size()) {
      throw std::runtime_error("frame index out of range");
    }
    const ogs::CameraIntrinsics intr = load_intrinsics(render_intr);
    const ogs::LabelRenderResult result =
        ogs::render_label_map(scene, trajectory[render_frame], intr);
    ogs::write_ppm(result.frame.rgb, render_out + ".ppm");
    ogs::write_depth_map(result.frame.depth, render_out + "_depth.ogdm");
    ogs::write_label_map(result.labels.label_map, render_out + "_labels.oglm");
    std::cout << "rendered frame " << render_frame << " to " << render_out << "*\n";
  });

  // --- manipulate ----------------------------------------------------------
  auto* manipulate = app.add_subcommand("manipulate", "Edit a scene file");
  std::string man_scene, man_out;
  std::uint32_t man_label = 0;
  manipulate->add_option("--scene", man_scene, "Scene file (OGS1)")->required();
  manipulate->add_option("--remove-label", man_label, "Remove all Gaussians with this label")
      ->required();
  manipulate->add_option("--out", man_out, "Output scene file")->required();
  manipulate->callback([&] {
    ogs::GaussianScene scene = ogs::read_scene(man_scene);
    const std::size_t removed = scene.remove_label(man_label);
    ogs::write_scene(scene, man_out);
    std::cout << "removed " << removed << " gaussians with label " << man_label << "\n";
  });

  // --- consensus -----------------------------------------------------------
  auto* consensus = app.add_subcommand("consensus", "Classify one input map against one rendering");
  std::string cons_input, cons_rendered, cons_conf, cons_registry;
  ogs::ConsensusThresholds cons_thresholds;
  float default_conf = 0.9f;
  consensus->add_option("--input", cons_input, "Input label map (OGLM)")->required();
  consensus->add_option("--rendered", cons_rendered, "Rendered label map (OGLM)")->required();
  consensus->add_option("--conf", cons_conf, "Input confidence map (OGCM)");
  consensus->add_option("--registry", cons_registry, "Registry confidences: `label score` lines");
  consensus->add_option("--default-conf", default_conf, "Confidence when no file is given");
  consensus->add_option("--tau1", cons_thresholds.tau1, "Full-match overlap threshold");
  consensus->add_option("--tau2", cons_thresholds.tau2, "Part-match overlap threshold");
  consensus->add_option("--tau3", cons_thresholds.tau3, "New-object overlap ceiling");
  consensus->callback([&] {
    ogs::InputSegmentation input;
    input.label_map = ogs::read_label_map(cons_input);
    const ogs::LabelMap rendered = ogs::read_label_map(cons_rendered);

    ogs::ScalarGrid conf;
    if (!cons_conf.empty()) conf = ogs::read_confidence_map(cons_conf);
    for (const std::uint32_t l : input.label_map.distinct_labels()) {
      if (cons_conf.empty()) {
        input.confidences[l] = default_conf;
      } else {
        double sum = 0.0;
        std::size_t n = 0;
        for (int y = 0; y < input.label_map.height(); ++y) {
          for (int x = 0; x < input.label_map.width(); ++x) {
            if (input.label_map.labels(y, x) != l) continue;
            sum += conf(y, x);
            ++n;
          }
        }
        input.confidences[l] = static_cast<float>(sum / static_cast<double>(n));
      }
      input.table.entries[l] = ogs::ClassEntry{};
    }

    ogs::GaussianScene registry;
    for (const std::uint32_t l : rendered.distinct_labels()) {
      registry.register_label(l, default_conf);
    }
    if (!cons_registry.empty()) {
      std::ifstream is(cons_registry);
      if (!is) throw std::runtime_error(cons_registry + ": cannot open for reading");
      std::uint32_t label;
      float score;
      while (is >> label >> score) {
        if (label == ogs::kBackgroundLabel) continue;
        registry.register_label(label, score);
        registry.set_confidence(label, score);
      }
    }

    const ogs::OverlapStats stats = ogs::overlap_stats(input.label_map, rendered);
    const ogs::MatchClassification classes = ogs::classify_matches(stats, cons_thresholds);
    const ogs::ConsensusOutcome outcome =
        ogs::resolve_consensus(input, rendered, stats, classes, registry);
    for (const auto& [ls, entry] : classes.by_input_label) {
      std::cout << "input " << ls << " " << kind_name(entry.kind) << " -> "
                << outcome.mapping.at(ls) << "\n";
    }
    std::cout << "relabel_commands " << outcome.relabel_commands.size() << "\n";
    std::cout << "new_labels " << outcome.new_labels.size() << "\n";
    std::cout << "decayed_scene " << outcome.decayed_scene_labels.size() << "\n";
    std::cout << "decayed_input " << outcome.decayed_input_labels.size() << "\n";
  });

  // --- bench ---------------------------------------------------------------
  auto* bench = app.add_subcommand("bench", "Label-vs-RGB render throughput");
  SynthFlags bench_flags;
  bench_flags.scene.object_count = 20;
  bench_flags.scene.gaussians_per_object = 500;
  int repeats = 5;
  add_scene_flags(*bench, bench_flags);
  bench->add_option("--repeats", repeats, "Timing repetitions (min is kept)");
  bench->callback([&] {
    finalize_intrinsics(bench_flags);
    const ogs::SyntheticDataset dataset =
        ogs::generate_synthetic(bench_flags.scene, bench_flags.seed);
    const ogs::BenchReport report =
        ogs::bench_render(dataset.gt_scene, dataset.trajectory.front(),
                          bench_flags.scene.intrinsics, ogs::RenderSettings{}, repeats);
    std::cout << "gaussians " << dataset.gt_scene.gaussians().size() << "\n";
    std::cout << "rgb_ms " << report.rgb_ms << "\n";
    std::cout << "label_ms " << report.label_ms << "\n";
    std::cout << "ratio " << report.ratio << "\n";
  });

  try {
    CLI11_PARSE(app, argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
