// Command-line front end: validate bases, build Okounkov bodies, evaluate
// costs and transforms, run energy cross-checks and transport solves, and
// emit CSV/JSON/SVG artifacts deterministically.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

#include "skelot/energy.hpp"
#include "skelot/io.hpp"
#include "skelot/random.hpp"

namespace fs = std::filesystem;
using namespace skelot;

namespace {

struct CommonOpts {
  std::string model_spec;
  std::string basis_file;
  std::string skeleton_file;
  std::string anchor;
  int degree = 0;  // 0 = every materialised degree
  int lmax = 12;
  double grid_h = 1.0 / 256;
  std::string body_scheme = "lattice";
  int body_res = 8;
  double tol = 1e-6;
  int max_iter = 5000;
  uint64_t seed = 1;
  std::string out_dir = "out";
};

void add_common(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--model", o.model_spec, "built-in model spec, e.g. monomial(1) or tate(1/2)");
  cmd->add_option("--basis", o.basis_file, "basis family JSON file");
  cmd->add_option("--skeleton", o.skeleton_file, "skeleton JSON file (with --basis)");
  cmd->add_option("--anchor", o.anchor, "anchor point as face:coords, e.g. seg:137/1000");
  cmd->add_option("--degree", o.degree, "restrict validation to one degree (0 = all)");
  cmd->add_option("--lmax", o.lmax, "degree truncation");
  cmd->add_option("--grid-h", o.grid_h, "skeleton quadrature resolution");
  cmd->add_option("--body-scheme", o.body_scheme, "body sampling scheme: lattice|centroid");
  cmd->add_option("--body-res", o.body_res, "body sampling resolution");
  cmd->add_option("--tol", o.tol, "solver tolerance");
  cmd->add_option("--max-iter", o.max_iter, "solver iteration cap");
  cmd->add_option("--seed", o.seed, "seed echoed into all artifacts");
  cmd->add_option("--out", o.out_dir, "output directory");
}

Model load_model(const CommonOpts& o) {
  if (!o.model_spec.empty()) {
    ModelSpec ms = ModelSpec::parse(o.model_spec);
    if (ms.l_max < o.lmax) ms.l_max = o.lmax;
    return instantiate(ms);
  }
  if (o.basis_file.empty() || o.skeleton_file.empty())
    throw Error(ErrorCode::malformed_input, "need --model or both --skeleton and --basis");
  Model m;
  m.name = fs::path(o.basis_file).stem().string();
  nlohmann::json sdoc, bdoc;
  try {
    sdoc = nlohmann::json::parse(read_file(o.skeleton_file));
    bdoc = nlohmann::json::parse(read_file(o.basis_file));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::malformed_input,
                std::string("JSON parse error at byte ") + std::to_string(e.byte) + ": " + e.what());
  }
  m.skeleton = Skeleton::build(sdoc);
  auto add_basis = [&](const nlohmann::json& doc) {
    DegreeBasis b = DegreeBasis::from_json(doc);
    m.degrees.push_back(b.degree);
    m.bases[b.degree] = std::move(b);
  };
  if (bdoc.contains("family")) {
    for (const auto& d : bdoc.at("family")) add_basis(d);
  } else {
    add_basis(bdoc);
  }
  m.Ln = 1;
  m.seed = o.seed;
  return m;
}

SkeletonPoint parse_anchor(const Model& m, const std::string& text, int lmax) {
  if (text.empty()) return m.default_anchor(lmax);
  auto colon = text.find(':');
  if (colon == std::string::npos)
    throw Error(ErrorCode::malformed_input, "anchor must be face:coords");
  SkeletonPoint p;
  p.face = m.skeleton.face_index(text.substr(0, colon));
  std::string rest = text.substr(colon + 1);
  std::string cur;
  for (char c : rest) {
    if (c == ',') {
      p.coords.push_back(rat_parse(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) p.coords.push_back(rat_parse(cur));
  if (static_cast<int>(p.coords.size()) != m.skeleton.n())
    throw Error(ErrorCode::malformed_input, "anchor arity mismatch");
  return p;
}

// The cost field and measure hold pointers into the model, so the model
// lives behind a stable address.
struct Instance {
  std::unique_ptr<Model> model_ptr;
  Model& model;
  Anchor anchor;
  GradientSemigroup semigroup;
  OkounkovBody body;
  BodyMeasure nu;
  SkeletonMeasure mu;
  CostField cost;
};

Instance make_instance(const CommonOpts& o) {
  auto model = std::make_unique<Model>(load_model(o));
  Model& m = *model;
  SkeletonPoint y = parse_anchor(m, o.anchor, o.lmax);
  Anchor anchor = make_anchor(m.skeleton, m.bases, o.lmax, y);
  GradientSemigroup gs = gradient_semigroup(m.skeleton, m.bases, anchor);
  OkounkovBody body = okounkov_body(gs);
  BodySampleScheme scheme = o.body_scheme == "centroid" ? BodySampleScheme::centroid_cell
                                                        : BodySampleScheme::lattice;
  BodyMeasure nu = body_measure(body, scheme, o.body_res);
  SkeletonMeasure mu = lebesgue_measure(m.skeleton);
  CostField cf = m.closed_form ? CostField::closed_form(m, anchor, body)
                               : CostField::fekete(m, anchor, body, o.lmax);
  return Instance{std::move(model), m,        std::move(anchor), std::move(gs),
                  std::move(body),  std::move(nu), std::move(mu), std::move(cf)};
}

void ensure_out(const CommonOpts& o) { fs::create_directories(o.out_dir); }

nlohmann::json run_meta(const CommonOpts& o, const Model& m) {
  nlohmann::json j;
  j["seed"] = o.seed;
  j["model"] = m.name;
  j["lmax"] = o.lmax;
  return j;
}

int cmd_validate(const CommonOpts& o) {
  ensure_out(o);
  Model model = load_model(o);
  nlohmann::json verdicts = nlohmann::json::array();
  bool all_valid = true;
  nlohmann::json witness;
  for (auto& [l, basis] : model.bases) {
    if (l > o.lmax) continue;
    if (o.degree > 0 && l != o.degree) continue;
    validate_sections(model.skeleton, basis);
    IndependenceVerdict v = check_valuative_independence(model.skeleton, basis);
    nlohmann::json jv;
    jv["degree"] = l;
    jv["valid"] = v.valid;
    jv["chambers"] = v.chambers_checked;
    if (!v.valid) {
      all_valid = false;
      witness["degree"] = l;
      witness["chamber"] = v.counterexample->chamber;
      witness["section_a"] = v.counterexample->label_a;
      witness["section_b"] = v.counterexample->label_b;
      witness["gradient"] = v.counterexample->gradient;
    }
    verdicts.push_back(jv);
  }
  nlohmann::json doc = run_meta(o, model);
  doc["command"] = "validate";
  doc["valid"] = all_valid;
  doc["verdicts"] = verdicts;
  if (!all_valid) doc["witness"] = witness;
  write_file(o.out_dir + "/validate.json", dump_json(doc));
  if (!all_valid) {
    write_file(o.out_dir + "/witness.json", dump_json(witness));
    std::cerr << "invalid basis; witness written\n";
    return 2;
  }
  return 0;
}

int cmd_okounkov(const CommonOpts& o) {
  ensure_out(o);
  Instance I = make_instance(o);
  write_file(o.out_dir + "/body.json", dump_json(I.body.to_json()));

  Csv csv;
  csv.meta("seed", std::to_string(o.seed));
  csv.meta("scheme", o.body_scheme + "(" + std::to_string(o.body_res) + ")");
  std::vector<std::string> head = {"weight"};
  for (int d = 0; d < I.model.skeleton.n(); ++d) head.insert(head.end() - 1, "p" + std::to_string(d));
  csv.header(head);
  for (size_t j = 0; j < I.nu.size(); ++j) {
    std::vector<std::string> row;
    for (int d = 0; d < I.model.skeleton.n(); ++d) row.push_back(Csv::num(I.nu.points()[j][d]));
    row.push_back(Csv::num(I.nu.weights()[j]));
    csv.row(row);
  }
  write_file(o.out_dir + "/body_measure.csv", csv.str());

  VolumeCheckReport vr = body_volume_check(I.body, I.semigroup, I.model.Ln, I.model.skeleton.n());

  // Containment of the body in the gradient hull: every body vertex is a
  // scaled anchor gradient, witnessed by the section that attains it.
  nlohmann::json witnesses = nlohmann::json::array();
  bool contained = true;
  for (const auto& v : I.body.poly.vertices()) {
    bool hit = false;
    for (const auto& [l, grads] : I.semigroup.levels) {
      for (const auto& g : grads) {
        bool eq = true;
        for (int d = 0; d < I.model.skeleton.n(); ++d)
          eq = eq && (v[d] * l == rat_ll(g[d]));
        if (eq) {
          nlohmann::json w;
          w["vertex"] = ratvec_str(v);
          w["degree"] = l;
          witnesses.push_back(w);
          hit = true;
          break;
        }
      }
      if (hit) break;
    }
    contained = contained && hit;
  }

  nlohmann::json doc = run_meta(o, I.model);
  doc["command"] = "okounkov";
  doc["body_in_gradient_hull"] = contained;
  doc["hull_witnesses"] = witnesses;
  doc["volume"] = rat_str(vr.volume);
  doc["expected"] = rat_str(vr.expected);
  doc["discrepancy"] = rat_str(vr.discrepancy);
  doc["additivity_ok"] = I.semigroup.additivity_ok;
  nlohmann::json ratios = nlohmann::json::array();
  for (auto& [l, r] : vr.count_ratios) ratios.push_back({{"degree", l}, {"ratio", fmt17(r)}});
  doc["count_ratios"] = ratios;
  write_file(o.out_dir + "/okounkov.json", dump_json(doc));
  return 0;
}

int cmd_cost(const CommonOpts& o) {
  ensure_out(o);
  Instance I = make_instance(o);
  SkeletonGrid grid(I.model.skeleton, I.mu, o.grid_h);
  GridFunction zero{&grid, std::vector<double>(grid.size(), 0.0)};
  BodyFunction zc = c_transform_skeleton_to_body(zero, I.cost, I.nu);

  Csv csv;
  csv.meta("seed", std::to_string(o.seed));
  csv.meta("grid_h", fmt17(o.grid_h));
  std::vector<std::string> head;
  for (int d = 0; d < I.model.skeleton.n(); ++d) head.push_back("p" + std::to_string(d));
  head.push_back("value");
  head.push_back("argmax_node");
  csv.header(head);
  for (size_t j = 0; j < I.nu.size(); ++j) {
    std::vector<std::string> row;
    for (int d = 0; d < I.model.skeleton.n(); ++d) row.push_back(Csv::num(I.nu.points()[j][d]));
    row.push_back(Csv::num(zc.v[j]));
    row.push_back(std::to_string(zc.argmax[j]));
    csv.row(row);
  }
  write_file(o.out_dir + "/transform.csv", csv.str());

  // Fekete sample diagnostics.
  Rng rng(o.seed);
  nlohmann::json samples = nlohmann::json::array();
  for (int t = 0; t < 10; ++t) {
    size_t j = rng.index(I.nu.size());
    const auto& nd = grid.nodes()[rng.index(grid.size())];
    try {
      FeketeValue fv = fekete_cost(I.cost, nd.face, nd.x, I.nu.points()[j]);
      nlohmann::json js;
      js["value"] = fmt17(fv.value);
      js["error"] = fmt17(fv.error);
      js["degree"] = fv.degree;
      js["section"] = fv.label;
      samples.push_back(js);
    } catch (const Error& e) {
      samples.push_back({{"error", e.what()}});
    }
  }
  nlohmann::json doc = run_meta(o, I.model);
  doc["command"] = "cost";
  doc["lipschitz"] = fmt17(I.cost.lipschitz());
  doc["fekete_samples"] = samples;
  write_file(o.out_dir + "/cost.json", dump_json(doc));
  return 0;
}

int cmd_energy(const CommonOpts& o) {
  ensure_out(o);
  Instance I = make_instance(o);
  SkeletonGrid grid(I.model.skeleton, I.mu, o.grid_h);

  // Seeded pair of bundle potentials.
  Rng rng(o.seed);
  auto bundle = [&](int count) {
    std::vector<double> w(I.nu.size(), 1e30);
    for (int i = 0; i < count; ++i) {
      size_t j = rng.index(I.nu.size());
      w[j] = rng.uniform(-0.3, 0.3);
    }
    return w;
  };
  PotentialPc phi(I.cost, I.nu, bundle(4));
  PotentialPc psi(I.cost, I.nu, bundle(4));
  auto fn = [](const PotentialPc& p) {
    return [&p](int face, const std::vector<double>& x) { return p.eval(face, x); };
  };
  auto breaks = [&](const PotentialPc& p) {
    return [&p](int face) {
      std::vector<double> out;
      for (size_t j = 0; j < p.samples().size(); ++j)
        for (double b : p.cost().x_breakpoints(face, p.samples().points()[j])) out.push_back(b);
      return out;
    };
  };
  std::vector<int> schedule;
  for (int l = 4; l <= o.lmax; l *= 2) schedule.push_back(l);
  EnergyReport rep = energy_consistency(fn(phi), breaks(phi), fn(psi), breaks(psi), I.model.bases,
                                        I.cost, I.nu, I.model.Ln, schedule, grid);

  Csv csv;
  csv.meta("seed", std::to_string(o.seed));
  csv.header({"degree", "limit_value", "gap"});
  for (size_t i = 0; i < rep.limit_values.size(); ++i) {
    csv.row({std::to_string(rep.limit_values[i].first), Csv::num(rep.limit_values[i].second),
             i ? Csv::num(rep.cauchy_gaps[i - 1]) : std::string("")});
  }
  csv.row({"integral", Csv::num(rep.integral_diff), Csv::num(rep.final_vs_integral)});
  write_file(o.out_dir + "/energy.csv", csv.str());

  nlohmann::json doc = run_meta(o, I.model);
  doc["command"] = "energy";
  doc["integral_diff"] = fmt17(rep.integral_diff);
  doc["final_vs_integral"] = fmt17(rep.final_vs_integral);
  write_file(o.out_dir + "/energy.json", dump_json(doc));
  return 0;
}

int cmd_solve(const CommonOpts& o, int cert_points) {
  ensure_out(o);
  Instance I = make_instance(o);
  SolveOptions sopts;
  sopts.tol = o.tol;
  sopts.max_iter = o.max_iter;
  sopts.grid_h = o.grid_h;
  auto [pot, cert] = solve_kantorovich(I.mu, I.nu, I.cost, sopts);
  std::optional<SkeletonGrid> cellgrid;
  if (!I.cost.supports_exact_cells()) cellgrid.emplace(I.model.skeleton, I.mu, o.grid_h);
  LaguerreDecomposition cells = laguerre_cells(pot, I.mu, cellgrid ? &*cellgrid : nullptr);

  ComparisonReport comp =
      comparison_certificate(pot, I.model, I.mu, std::min(o.lmax, 12), cert_points, o.seed);

  nlohmann::json doc = run_meta(o, I.model);
  doc["command"] = "solve";
  doc["residual_inf"] = fmt17(cert.residual_inf);
  doc["functional_value"] = fmt17(cert.functional_value);
  doc["iterations"] = cert.iterations;
  doc["converged"] = cert.converged;
  doc["gauge"] = fmt17(cert.gauge);
  doc["method"] = cert.method;
  doc["null_set_fraction"] = fmt17(cert.null_set_fraction);
  doc["comparison"] = {{"tested", comp.tested},
                       {"passed", comp.passed},
                       {"collar_mass", fmt17(comp.wall_collar_mass)}};
  write_file(o.out_dir + "/certificate.json", dump_json(doc));

  Csv csv;
  csv.meta("seed", std::to_string(o.seed));
  csv.header({"sample", "psi", "cell_mass"});
  for (size_t j = 0; j < I.nu.size(); ++j)
    csv.row({std::to_string(j), Csv::num(pot.weights()[j]), Csv::num(cells.cells[j].mass)});
  write_file(o.out_dir + "/weights.csv", csv.str());

  if (I.model.skeleton.n() <= 2)
    write_file(o.out_dir + "/cells.svg", cells_svg(cells, I.model.skeleton));

  if (!cert.converged) {
    std::cerr << "solver hit max_iter with residual " << cert.residual_inf << "\n";
    return 3;
  }
  return 0;
}

int cmd_report(const CommonOpts& o) {
  ensure_out(o);
  int rc = cmd_validate(o);
  if (rc != 0) return rc;
  rc = cmd_okounkov(o);
  if (rc != 0) return rc;
  return cmd_solve(o, 20);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tropical skeleton calculus and semi-discrete transport"};
  app.require_subcommand(1);

  CommonOpts o;
  int cert_points = 50;
  CLI::App* c_validate = app.add_subcommand("validate", "check a basis family");
  CLI::App* c_okounkov = app.add_subcommand("okounkov", "gradient semigroup, body, measure");
  CLI::App* c_cost = app.add_subcommand("cost", "cost transforms and fekete diagnostics");
  CLI::App* c_energy = app.add_subcommand("energy", "relative-volume vs integral energies");
  CLI::App* c_solve = app.add_subcommand("solve", "Kantorovich dual solve plus certificates");
  CLI::App* c_report = app.add_subcommand("report", "validate + okounkov + solve bundle");
  for (CLI::App* c : {c_validate, c_okounkov, c_cost, c_energy, c_solve, c_report})
    add_common(c, o);
  c_solve->add_option("--cert-points", cert_points, "comparison certificate sample count");

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand(c_validate)) return cmd_validate(o);
    if (app.got_subcommand(c_okounkov)) return cmd_okounkov(o);
    if (app.got_subcommand(c_cost)) return cmd_cost(o);
    if (app.got_subcommand(c_energy)) return cmd_energy(o);
    if (app.got_subcommand(c_solve)) return cmd_solve(o, cert_points);
    if (app.got_subcommand(c_report)) return cmd_report(o);
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
