#include "rvparc/geodesics.hpp"
#include "rvparc/mesh_io.hpp"
#include "rvparc/metrics.hpp"
#include "rvparc/strain.hpp"
#include "rvparc/synthgen.hpp"
#include "rvparc/volumetric.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>

using namespace rvparc;
using nlohmann::json;

namespace {

const char* region_name(int r) {
  static const char* names[] = {"inlet", "outflow", "apical"};
  return names[r];
}

json regional(const std::array<double, 3>& v, double total) {
  json j{{"total", total}};
  for (int r = 0; r < 3; ++r) j[region_name(r)] = v[r];
  return j;
}

void write_json(const json& j, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << j.dump(2) << "\n";
    return;
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << j.dump(2) << "\n";
}

std::string sidecar_path(const std::string& mesh_path) {
  return std::filesystem::path(mesh_path).replace_extension(".json").string();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Landmark-based volumetric parcellation of ventricle surfaces and synthetic remodelling"};
  app.require_subcommand(1);

  std::string mesh, landmarks, out, es, ref, def, mode = "apex-circ", method = "geodesic", sources = "all";
  std::string longitudinal = "heat", landmarks_out;
  double tet_edge = 0.0, target_ml = 5.0, target_frac = 0.10, voxel = 1.0;
  double omega = 15.0, omega_valve = 7.5;
  bool paper_literal = false, no_align = false, harmonic = false;
  int threads = 0;
  TemplateParams tp;

  auto* geo = app.add_subcommand("geodesics", "exact geodesic distance to each landmark (VTK point data)");
  geo->add_option("--mesh", mesh, "input surface")->required()->check(CLI::ExistingFile);
  geo->add_option("--landmarks", landmarks, "landmark JSON")->required()->check(CLI::ExistingFile);
  geo->add_option("--out", out, "output .vtk")->required();
  geo->add_option("--sources", sources, "all|rim")->check(CLI::IsMember({"all", "rim"}));

  auto* fr = app.add_subcommand("frames", "longitudinal and circumferential directions (VTK cell data)");
  fr->add_option("--mesh", mesh)->required()->check(CLI::ExistingFile);
  fr->add_option("--landmarks", landmarks)->required()->check(CLI::ExistingFile);
  fr->add_option("--out", out)->required();
  fr->add_option("--longitudinal", longitudinal, "heat|geodesic-gradient")
      ->check(CLI::IsMember({"heat", "geodesic-gradient"}));

  auto* parc = app.add_subcommand("parcellate", "regional volumes (and EF with --es)");
  parc->add_option("--mesh", mesh, "ED surface")->required()->check(CLI::ExistingFile);
  parc->add_option("--landmarks", landmarks)->required()->check(CLI::ExistingFile);
  parc->add_option("--es", es, "ES surface with the same connectivity")->check(CLI::ExistingFile);
  parc->add_option("--out", out, "report JSON (default stdout)");
  parc->add_option("--method", method, "geodesic|harmonic")->check(CLI::IsMember({"geodesic", "harmonic"}));
  parc->add_option("--tet-edge", tet_edge, "interior spacing in mm (default: mean edge length)");

  auto* st = app.add_subcommand("strain", "per-triangle strain between corresponded surfaces");
  st->add_option("--ref", ref)->required()->check(CLI::ExistingFile);
  st->add_option("--def", def)->required()->check(CLI::ExistingFile);
  st->add_option("--landmarks", landmarks)->required()->check(CLI::ExistingFile);
  st->add_option("--out", out)->required();
  st->add_flag("--no-align", no_align, "skip rigid alignment of def onto ref");

  auto* sy = app.add_subcommand("synth", "synthetic remodelling of a surface");
  sy->add_option("--mesh", mesh)->required()->check(CLI::ExistingFile);
  sy->add_option("--landmarks", landmarks)->required()->check(CLI::ExistingFile);
  sy->add_option("--mode", mode)->required();
  auto* tml = sy->add_option("--target-ml", target_ml, "volume increment for local modes");
  auto* tfr = sy->add_option("--target-frac", target_frac, "volume fraction for global modes");
  tml->excludes(tfr);
  sy->add_option("--omega", omega, "bandwidth around the target landmark (mm)");
  sy->add_option("--omega-valve", omega_valve, "valve bandwidth (mm)");
  sy->add_flag("--paper-literal", paper_literal, "growing exp(+d^2/w^2) factors instead of decaying ones");
  sy->add_option("--longitudinal", longitudinal)->check(CLI::IsMember({"heat", "geodesic-gradient"}));
  sy->add_option("--out", out, "output surface; a .json sidecar is written next to it")->required();

  std::vector<std::string> pair;
  auto* cmp = app.add_subcommand("compare", "volume difference, Dice and node distances");
  cmp->add_option("meshes", pair, "two surfaces")->required()->expected(2)->check(CLI::ExistingFile);
  cmp->add_option("--landmarks", landmarks, "align b onto a by landmarks")->check(CLI::ExistingFile);
  cmp->add_option("--voxel", voxel, "Dice voxel size (mm)");
  cmp->add_option("--out", out, "report JSON (default stdout)");

  auto* val = app.add_subcommand("validate", "nine-case synthetic validation table");
  val->add_option("--template", mesh)->required()->check(CLI::ExistingFile);
  val->add_option("--landmarks", landmarks)->required()->check(CLI::ExistingFile);
  val->add_option("--out", out, "CSV table")->required();
  val->add_flag("--harmonic", harmonic, "also score the harmonic comparator");
  val->add_option("--threads", threads);
  val->add_option("--tet-edge", tet_edge);

  auto* tpl = app.add_subcommand("template", "generate the bundled RV-like template");
  tpl->add_option("--out", out)->required();
  tpl->add_option("--landmarks-out", landmarks_out)->required();
  tpl->add_option("--vertices", tp.num_vertices);
  tpl->add_option("--volume", tp.volume_ml, "ml");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*geo) {
      const TriSurface s = load_surface(mesh);
      const LandmarkSet lm = load_landmarks(landmarks);
      const LandmarkDistances d =
          distance_to_set(s, lm, sources == "rim" ? LandmarkSources::rim : LandmarkSources::all);
      MeshFields f;
      f.point_scalars["d_apex"] = d.apex.values;
      f.point_scalars["d_tricuspid"] = d.tricuspid.values;
      f.point_scalars["d_pulmonary"] = d.pulmonary.values;
      save_surface(s, out, f);
    } else if (*fr) {
      const TriSurface s = load_surface(mesh);
      const FrameField ff = anatomical_frames(s, load_landmarks(landmarks),
                                              longitudinal == "heat" ? LongitudinalSource::heat
                                                                     : LongitudinalSource::geodesic_gradient);
      MeshFields f;
      f.cell_vectors["l"] = ff.l;
      f.cell_vectors["c"] = ff.c;
      f.point_scalars["u"] = ff.u;
      save_surface(s, out, f);
    } else if (*parc) {
      const TriSurface s = load_surface(mesh);
      const LandmarkSet lm = load_landmarks(landmarks);
      ParcellateOptions po;
      po.kind = method == "harmonic" ? FieldKind::harmonic : FieldKind::geodesic;
      po.tet.target_edge = tet_edge;
      const ParcellationResult ed = parcellate_surface(s, lm, po);
      json j;
      j["edv"] = regional(ed.parcellation.volume_ml, ed.parcellation.total_ml);
      if (!es.empty()) {
        const CorrespondencePair cp(s, load_surface(es));
        const ParcellationResult esr = transport_labels(cp, ed.surface_fields, po.tet);
        const RegionalReport rr = regional_metrics(ed.parcellation, esr.parcellation);
        j["esv"] = regional(rr.esv, rr.esv_total);
        j["ef"] = regional(rr.ef, rr.ef_total);
      }
      const Vec3& m = ed.midpoint.point;
      j["midpoint"] = {m.x(), m.y(), m.z()};
      j["midpoint_max_gap"] = ed.midpoint.max_gap;
      j["method"] = method;
      write_json(j, out);
    } else if (*st) {
      const TriSurface a = load_surface(ref);
      const TriSurface b = load_surface(def);
      const FrameField ff = anatomical_frames(a, load_landmarks(landmarks));
      const StrainField sf = no_align ? deformation_gradient(a, b, ff) : aligned_strain(a, b, ff);
      MeshFields f;
      f.cell_scalars["e_ll"] = sf.e_ll;
      f.cell_scalars["e_cc"] = sf.e_cc;
      save_surface(a, out, f);
    } else if (*sy) {
      const TriSurface s = load_surface(mesh);
      const LandmarkSet lm = load_landmarks(landmarks);
      const RemodelMode m = remodel_mode_from_string(mode);
      SynthOptions so;
      so.target_ml = target_ml;
      so.target_fraction = target_frac;
      so.spec.omega = omega;
      so.spec.omega_valve = omega_valve;
      so.spec.paper_literal = paper_literal;
      so.longitudinal = longitudinal == "heat" ? LongitudinalSource::heat : LongitudinalSource::geodesic_gradient;
      const SynthCase c = synthesize(s, lm, m, so);
      save_surface(c.surface, out);
      json j{{"mode", to_string(m)},
             {"volume_increment_ml", c.increment_ml},
             {is_global(m) ? "t" : "lambda", c.parameter}};
      if (!is_global(m)) {
        j["calibrated"] = c.calibrated;
        j["regula_falsi_iterations"] = c.iterations;
        j["optimizer_iterations"] = c.optimizer_iterations;
        j["final_energy"] = c.energy;
      }
      if (c.strain) {
        j["max_imposed_strain"] = c.strain->max_imposed;
        j["mean_strain_error"] = c.strain->mean_error;
        j["relative_strain_error_pct"] = 100.0 * c.strain->relative_error;
        j["mean_tensor_error"] = c.strain->mean_tensor_error;
      }
      write_json(j, sidecar_path(out));
      if (!c.calibrated) {
        std::cerr << "warning: volume target not reached within the iteration budget\n";
        return 3;
      }
    } else if (*cmp) {
      const TriSurface a = load_surface(pair[0]);
      const TriSurface b = load_surface(pair[1]);
      std::optional<LandmarkSet> lm;
      if (!landmarks.empty()) lm = load_landmarks(landmarks);
      const ComparisonReport r = compare_surfaces(a, b, lm ? &*lm : nullptr, voxel);
      json j{{"volume_a_ml", r.volume_a_ml},
             {"volume_b_ml", r.volume_b_ml},
             {"volume_difference_ml", r.volume_difference_ml},
             {"volume_difference_pct", r.volume_difference_pct},
             {"dice", r.dice},
             {"mean_node_to_surface_mm", r.distances.mean_node_to_surface},
             {"node_to_surface_mm", std::vector<double>(r.distances.node_to_surface.begin(),
                                                        r.distances.node_to_surface.end())}};
      if (r.distances.node_to_node.size() > 0) {
        j["mean_node_to_node_mm"] = r.distances.mean_node_to_node;
        j["node_to_node_mm"] =
            std::vector<double>(r.distances.node_to_node.begin(), r.distances.node_to_node.end());
      }
      write_json(j, out);
    } else if (*val) {
      const TriSurface s = load_surface(mesh);
      const LandmarkSet lm = load_landmarks(landmarks);
      ValidationOptions vo;
      if (harmonic) vo.kinds.push_back(FieldKind::harmonic);
      vo.threads = threads;
      vo.tet.target_edge = tet_edge;
      const auto cases = validate_pipeline(s, lm, vo);
      std::ofstream csv(out);
      if (!csv) throw IoError("cannot write " + out);
      csv << "mode,method,parameter,increment_ml,calibrated,computed_inlet,computed_outflow,computed_apical,"
             "theoretical_inlet,theoretical_outflow,theoretical_apical,acc,relative_strain_error\n";
      for (const auto& c : cases) {
        csv << to_string(c.mode) << ',' << (c.kind == FieldKind::geodesic ? "geodesic" : "harmonic") << ','
            << c.synth.parameter << ',' << c.synth.increment_ml << ',' << c.synth.calibrated;
        for (double v : c.accuracy.computed) csv << ',' << v;
        for (double v : c.accuracy.theoretical) csv << ',' << v;
        csv << ',' << c.accuracy.acc << ',';
        if (c.synth.strain) csv << c.synth.strain->relative_error;
        csv << '\n';
      }
    } else if (*tpl) {
      const Template t = generate_template(tp);
      save_surface(t.surface, out);
      save_landmarks(t.landmarks, landmarks_out);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
