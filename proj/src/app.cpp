#include "elastoray/app.hpp"

#include <chrono>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "elastoray/parallel.hpp"
#include "elastoray/reconstruct.hpp"
#include "elastoray/sgf.hpp"
#include "elastoray/tensorfield.hpp"

namespace elastoray::app {

namespace {

using nlohmann::json;

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

Vec3 parse_vec3(const std::string& text, const std::string& flag) {
    Vec3 v;
    char extra = 0;
    if (std::sscanf(text.c_str(), "%lf,%lf,%lf%c", &v.x, &v.y, &v.z, &extra) != 3)
        throw CLI::ValidationError(flag, "expected three comma-separated numbers, got '" + text + "'");
    return v;
}

// Run manifest written beside the first output of every subcommand.
struct ManifestScope {
    std::string command;
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
    uint64_t config_hash = 0;
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();

    ~ManifestScope() {
        if (outputs.empty()) return;
        try {
            json m;
            m["command"] = command;
            char hash[32];
            std::snprintf(hash, sizeof(hash), "%016" PRIx64, config_hash);
            m["config_hash"] = hash;
            m["inputs"] = inputs;
            m["outputs"] = outputs;
            m["wall_ms"] = std::chrono::duration_cast<std::chrono::milliseconds>(
                               std::chrono::steady_clock::now() - t0)
                               .count();
            m["version"] = kVersion;
            std::ofstream out(outputs.front() + ".manifest.json", std::ios::trunc);
            out << m.dump(2) << '\n';
        } catch (...) {
            // manifests are best-effort metadata
        }
    }
};

json vec3_json(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

}  // namespace

uint64_t fnv1a64(const std::string& bytes) {
    uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    for (size_t c = 0; c < header.size(); ++c) out << (c ? "," : "") << header[c];
    out << '\n';
    for (const auto& row : rows) {
        for (size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << fmt(row[c]);
        out << '\n';
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

namespace {

std::vector<std::vector<double>> read_numeric_csv(const std::string& path,
                                                  std::vector<std::string>* header_out) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty CSV: " + path);
    if (header_out) {
        header_out->clear();
        std::istringstream hs(line);
        std::string cell;
        while (std::getline(hs, cell, ',')) header_out->push_back(cell);
    }
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) row.push_back(std::strtod(cell.c_str(), nullptr));
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace

std::vector<TransformSample> read_samples_csv(const std::string& path) {
    std::vector<std::string> header;
    auto rows = read_numeric_csv(path, &header);
    if (header.size() < 3 || header[0] != "ray_id" || header[1] != "value" || header[2] != "length")
        throw std::runtime_error("samples CSV must have columns ray_id,value,length: " + path);
    std::vector<TransformSample> out;
    out.reserve(rows.size());
    for (const auto& row : rows) {
        if (row.size() < 3) throw std::runtime_error("short row in samples CSV: " + path);
        out.push_back({static_cast<size_t>(row[0]), row[1], row[2]});
    }
    return out;
}

void save_fan(const RayFan& fan, const std::string& config_text, const std::string& path) {
    json doc;
    doc["config"] = json::parse(config_text);
    json spec;
    spec["seeds"] = fan.spec.seeds;
    spec["dirs"] = fan.spec.dirs;
    spec["h_ray"] = fan.spec.h_ray;
    spec["cone_half_angle"] = fan.spec.cone_half_angle;
    spec["seed_margin"] = fan.spec.seed_margin;
    spec["max_length"] = fan.spec.max_length;
    spec["min_length"] = fan.spec.min_length;
    spec["jitter_seed"] = fan.spec.jitter_seed;
    spec["center_hint"] = vec3_json(fan.spec.center_hint);
    doc["spec"] = spec;
    json counts;
    counts["kept"] = fan.counts.kept;
    counts["cap_exit"] = fan.counts.cap_exit;
    counts["trapped"] = fan.counts.trapped;
    counts["too_short"] = fan.counts.too_short;
    counts["seed_rejected"] = fan.counts.seed_rejected;
    doc["counts"] = counts;
    json launches = json::array();
    for (const FanLaunch& l : fan.launches) {
        json e;
        e["seed"] = vec3_json(l.seed);
        e["dir"] = vec3_json(l.dir);
        launches.push_back(e);
    }
    doc["launches"] = launches;

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << doc.dump(2) << '\n';
    if (!out) throw std::runtime_error("write failed: " + path);
}

LoadedFan load_fan(const std::string& path) {
    json doc;
    try {
        doc = json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw std::runtime_error("fan file is not valid JSON: " + path + ": " + e.what());
    }
    LoadedFan out;
    out.config = parse_model_config(doc.at("config").dump());

    const json& spec = doc.at("spec");
    out.fan.spec.seeds = spec.at("seeds").get<int>();
    out.fan.spec.dirs = spec.at("dirs").get<int>();
    out.fan.spec.h_ray = spec.at("h_ray").get<double>();
    out.fan.spec.cone_half_angle = spec.at("cone_half_angle").get<double>();
    out.fan.spec.seed_margin = spec.at("seed_margin").get<double>();
    out.fan.spec.max_length = spec.at("max_length").get<double>();
    out.fan.spec.min_length = spec.at("min_length").get<double>();
    out.fan.spec.jitter_seed = spec.at("jitter_seed").get<unsigned>();
    const json& ch = spec.at("center_hint");
    out.fan.spec.center_hint = {ch[0].get<double>(), ch[1].get<double>(), ch[2].get<double>()};

    const json& counts = doc.at("counts");
    out.fan.counts.kept = counts.at("kept").get<size_t>();
    out.fan.counts.cap_exit = counts.at("cap_exit").get<size_t>();
    out.fan.counts.trapped = counts.at("trapped").get<size_t>();
    out.fan.counts.too_short = counts.at("too_short").get<size_t>();
    out.fan.counts.seed_rejected = counts.at("seed_rejected").get<size_t>();

    for (const json& e : doc.at("launches")) {
        const json& s = e.at("seed");
        const json& d = e.at("dir");
        out.fan.launches.push_back({{s[0].get<double>(), s[1].get<double>(), s[2].get<double>()},
                                    {d[0].get<double>(), d[1].get<double>(), d[2].get<double>()}});
    }

    // Re-trace the kept rays; tracing is deterministic so the fan is
    // reproduced exactly from the launches.
    RayOptions opts;
    opts.max_length = out.fan.spec.max_length;
    out.fan.rays.resize(out.fan.launches.size());
    const MediumModel& model = out.config.model;
    const LensRegion& region = out.config.region;
    parallel_for(out.fan.launches.size(), [&](size_t i) {
        out.fan.rays[i] =
            integrate_bicharacteristic(model, region, out.fan.launches[i].seed,
                                       out.fan.launches[i].dir, BranchSign::Plus, WaveMode::P,
                                       out.fan.spec.h_ray, opts);
    });
    return out;
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

namespace {

int cmd_admissible(const std::string& config_path, const std::string& out_path) {
    ManifestScope manifest;
    manifest.command = "admissible";
    manifest.inputs = {config_path};
    std::string text = read_file(config_path);
    manifest.config_hash = fnv1a64(text);
    ModelConfig cfg = parse_model_config(text);
    AdmissibilityReport rep = admissibility_report(cfg.model, cfg.region, cfg.grid);

    json doc;
    doc["model"] = cfg.model.name();
    doc["pass"] = rep.pass;
    doc["nodes_total"] = rep.nodes_total;
    doc["nodes_in_region"] = rep.nodes_in_region;
    doc["fail_rho"] = rep.fail_rho;
    doc["fail_mu"] = rep.fail_mu;
    doc["fail_lame_sum"] = rep.fail_lame_sum;
    doc["fail_convexity"] = rep.fail_convexity;
    doc["eps_degenerate"] = rep.eps_degenerate;
    doc["degenerate_fraction"] = rep.degenerate_fraction;

    std::string dump = doc.dump(2) + "\n";
    if (!out_path.empty()) {
        std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open for writing: " + out_path);
        out << dump;
        manifest.outputs = {out_path};
    }
    std::cout << dump;
    return 0;
}

int cmd_trace(const std::string& config_path, const Vec3& x0, const Vec3& xi0,
              const std::string& mode_s, const std::string& sign_s, double step,
              double fan_offset, const std::string& out_path) {
    ManifestScope manifest;
    manifest.command = "trace";
    manifest.inputs = {config_path};
    std::string text = read_file(config_path);
    manifest.config_hash = fnv1a64(text);
    ModelConfig cfg = parse_model_config(text);

    WaveMode mode = mode_s == "s" ? WaveMode::S : WaveMode::P;
    BranchSign sign = sign_s == "minus" ? BranchSign::Minus : BranchSign::Plus;
    Bicharacteristic ray =
        integrate_bicharacteristic(cfg.model, cfg.region, x0, xi0, sign, mode, step);
    AmplitudeTrace amp =
        amplitude_transport(cfg.model, cfg.region, ray, FanKind::Parallel, fan_offset, 1.0);

    std::vector<std::vector<double>> rows;
    rows.reserve(ray.samples.size());
    for (size_t k = 0; k < ray.samples.size(); ++k) {
        const RaySample& s = ray.samples[k];
        double divn = k < amp.div_n.size() ? amp.div_n[k] : 0.0;
        double b0 = k < amp.b0.size() ? amp.b0[k] : 0.0;
        rows.push_back({s.s, s.t, s.x.x, s.x.y, s.x.z, s.tau, s.xi.x, s.xi.y, s.xi.z, divn, b0});
    }
    write_csv(out_path, {"s", "t", "x", "y", "z", "tau", "xi1", "xi2", "xi3", "divN", "b0"}, rows);
    manifest.outputs = {out_path};
    std::cout << "trace: " << ray.samples.size() << " samples, exit "
              << (ray.exit == RayExit::SurfaceS ? "S" :
                  ray.exit == RayExit::InnerCap ? "cap" : "trapped")
              << ", length " << fmt(ray.length()) << "\n";
    return 0;
}

int cmd_eikonal(const std::string& config_path, const Vec3& source, const std::string& mode_s,
                const std::string& out_path) {
    ManifestScope manifest;
    manifest.command = "eikonal";
    manifest.inputs = {config_path};
    std::string text = read_file(config_path);
    manifest.config_hash = fnv1a64(text);
    ModelConfig cfg = parse_model_config(text);
    WaveMode mode = mode_s == "s" ? WaveMode::S : WaveMode::P;
    TravelTimeField tt =
        eikonal_grid(cfg.model, cfg.region, PointSource{source}, cfg.grid, mode);
    GridField f = tt.as_field();
    // Unreached nodes carry +inf; store 0 with a cleared mask instead.
    for (size_t n = 0; n < f.grid.node_count(); ++n)
        if (!f.mask[n]) f.at(n, 0) = 0.0;
    write_sgf(f, out_path);
    manifest.outputs = {out_path};
    return 0;
}

int cmd_fan(const std::string& config_path, int seeds, int dirs, double step, unsigned jitter,
            const Vec3& center, const std::string& out_path) {
    ManifestScope manifest;
    manifest.command = "fan";
    manifest.inputs = {config_path};
    std::string text = read_file(config_path);
    manifest.config_hash = fnv1a64(text);
    ModelConfig cfg = parse_model_config(text);

    FanSpec spec;
    spec.seeds = seeds;
    spec.dirs = dirs;
    spec.h_ray = step;
    spec.jitter_seed = jitter;
    spec.center_hint = center;
    RayFan fan = generate_fan(cfg.model, cfg.region, spec);
    save_fan(fan, text, out_path);
    manifest.outputs = {out_path};
    std::cout << "fan: kept " << fan.counts.kept << ", cap-exit " << fan.counts.cap_exit
              << ", trapped " << fan.counts.trapped << ", too-short " << fan.counts.too_short
              << ", seed-rejected " << fan.counts.seed_rejected << "\n";
    return 0;
}

int cmd_build_b(const std::string& config1, const std::string& config2,
                const std::string& out_path) {
    ManifestScope manifest;
    manifest.command = "build-b";
    manifest.inputs = {config1, config2};
    std::string text1 = read_file(config1);
    std::string text2 = read_file(config2);
    manifest.config_hash = fnv1a64(text1 + text2);
    ModelConfig cfg1 = parse_model_config(text1);
    ModelConfig cfg2 = parse_model_config(text2);
    auto [b, coeffs] = build_difference_tensor(cfg1.model, cfg2.model, cfg1.grid);
    write_sgf(b, out_path);
    manifest.outputs = {out_path};
    return 0;
}

int cmd_sv(const std::string& in_path, const std::string& out_path) {
    ManifestScope manifest;
    manifest.command = "sv";
    manifest.inputs = {in_path};
    GridField b = read_sgf(in_path);
    if (b.ncomp != 6) throw std::runtime_error("sv: input SGF must have 6 components");
    SymTensor4Field w = saint_venant(b);
    write_sgf(w, out_path);
    manifest.outputs = {out_path};
    return 0;
}

int cmd_t4(const std::string& config1, const std::string& config2, const std::string& out_path) {
    ManifestScope manifest;
    manifest.command = "t4";
    manifest.inputs = {config1, config2};
    std::string text1 = read_file(config1);
    std::string text2 = read_file(config2);
    manifest.config_hash = fnv1a64(text1 + text2);
    ModelConfig cfg1 = parse_model_config(text1);
    ModelConfig cfg2 = parse_model_config(text2);
    const Grid3& grid = cfg1.grid;

    auto [b, coeffs] = build_difference_tensor(cfg1.model, cfg2.model, grid);
    (void)b;
    ScalarField rho1(grid, 1), rho2(grid, 1);
    for (int k = 0; k < grid.dims[2]; ++k)
        for (int j = 0; j < grid.dims[1]; ++j)
            for (int i = 0; i < grid.dims[0]; ++i) {
                size_t n = grid.lin(i, j, k);
                Vec3 x = grid.position(i, j, k);
                rho1.at(n, 0) = cfg1.model.rho_field().value(x);
                rho2.at(n, 0) = cfg2.model.rho_field().value(x);
            }
    ScalarField t4 = t4_functional(coeffs, cfg1.model, rho1, rho2, grid);
    write_sgf(t4, out_path);
    manifest.outputs = {out_path};
    return 0;
}

int cmd_transform(const std::string& in_path, const std::string& fan_path,
                  const std::string& out_path) {
    ManifestScope manifest;
    manifest.command = "transform";
    manifest.inputs = {in_path, fan_path};
    GridField b = read_sgf(in_path);
    if (b.ncomp != 6) throw std::runtime_error("transform: input SGF must have 6 components");
    LoadedFan lf = load_fan(fan_path);

    std::vector<std::vector<double>> rows(lf.fan.rays.size());
    parallel_for(lf.fan.rays.size(), [&](size_t r) {
        TransformSample s = forward_transform(b, lf.fan.rays[r]);
        rows[r] = {static_cast<double>(r), s.value, s.length};
    });
    write_csv(out_path, {"ray_id", "value", "length"}, rows);
    manifest.outputs = {out_path};
    return 0;
}

int cmd_invert(const std::string& fan_path, const std::string& samples_path, double reg,
               const std::string& out_path, const std::string& diag_path) {
    ManifestScope manifest;
    manifest.command = "invert";
    manifest.inputs = {fan_path, samples_path};
    LoadedFan lf = load_fan(fan_path);
    std::vector<TransformSample> samples = read_samples_csv(samples_path);

    InversionOptions opts;
    opts.reg = reg;
    auto [estimate, diag] = invert_transform(lf.fan, samples, lf.config.grid, opts);
    write_sgf(estimate, out_path);
    manifest.outputs = {out_path};
    if (!diag_path.empty()) {
        std::vector<std::vector<double>> rows;
        for (size_t i = 0; i < diag.residuals.size(); ++i)
            rows.push_back({static_cast<double>(i + 1), diag.residuals[i]});
        write_csv(diag_path, {"iteration", "residual"}, rows);
        manifest.outputs.push_back(diag_path);
    }
    std::cout << "invert: " << diag.iterations << " iterations, relative residual "
              << fmt(diag.final_relative_residual) << (diag.converged ? "" : " (iteration cap hit)")
              << "\n";
    return 0;
}

int cmd_certify(const std::string& config_path, const std::string& rho2_path,
                const std::string& fan_path, const std::string& samples_path,
                const std::string& out_path, const std::string& beta_path) {
    ManifestScope manifest;
    manifest.command = "certify";
    manifest.inputs = {config_path, rho2_path, fan_path, samples_path};
    std::string text = read_file(config_path);
    manifest.config_hash = fnv1a64(text);
    ModelConfig cfg = parse_model_config(text);
    GridField rho2 = read_sgf(rho2_path);
    if (rho2.ncomp != 1) throw std::runtime_error("certify: rho2 SGF must have 1 component");
    if (!same_layout(rho2.grid, cfg.grid))
        throw std::runtime_error("certify: rho2 grid does not match the config grid");
    LoadedFan lf = load_fan(fan_path);
    std::vector<TransformSample> samples = read_samples_csv(samples_path);

    Certificate cert =
        certify_uniqueness(cfg.model, cfg.region, rho2, lf.fan, samples, cfg.grid);

    json doc;
    doc["l2_norm"] = cert.l2_norm;
    doc["linf_norm"] = cert.linf_norm;
    doc["pde_residual"] = cert.pde_residual;
    doc["degenerate_fraction"] = cert.degenerate_fraction;
    doc["verdict"] = cert.verdict ? "pass" : "fail";
    doc["zero_threshold"] = cert.zero_threshold;
    doc["quadratic_remainder"] = cert.quadratic_remainder;
    doc["inversion_iterations"] = cert.inversion.iterations;
    doc["inversion_converged"] = cert.inversion.converged;
    doc["inversion_lambda"] = cert.inversion.lambda;
    doc["projection_iterations"] = cert.projection_iterations;
    doc["solve_iterations"] = cert.solve_iterations;
    std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + out_path);
    out << doc.dump(2) << '\n';
    manifest.outputs = {out_path};
    if (!beta_path.empty()) {
        write_sgf(cert.beta_minus, beta_path);
        manifest.outputs.push_back(beta_path);
    }
    std::cout << "certify: verdict " << (cert.verdict ? "pass" : "fail") << ", |beta-|_L2 "
              << fmt(cert.l2_norm) << ", degenerate fraction " << fmt(cert.degenerate_fraction)
              << "\n";
    return 0;
}

int cmd_plot_data(const std::string& ray_path, const std::string& samples_path,
                  const std::string& diag_path, const std::string& cert_path,
                  const std::string& beta_path, const std::string& outdir) {
    namespace fs = std::filesystem;
    fs::create_directories(outdir);
    ManifestScope manifest;
    manifest.command = "plot-data";
    std::ostringstream readme;
    readme << "# Plot data bundle\n\nGenerated CSV files and their columns:\n\n";

    if (!ray_path.empty()) {
        manifest.inputs.push_back(ray_path);
        std::vector<std::string> header;
        auto rows = read_numeric_csv(ray_path, &header);
        std::vector<std::vector<double>> xz, b0;
        for (const auto& r : rows) {
            if (r.size() < 11) throw std::runtime_error("plot-data: short row in " + ray_path);
            xz.push_back({r[0], r[2], r[4]});
            b0.push_back({r[0], r[10]});
        }
        write_csv((fs::path(outdir) / "ray_xz.csv").string(), {"s", "x", "z"}, xz);
        write_csv((fs::path(outdir) / "ray_b0.csv").string(), {"s", "b0"}, b0);
        manifest.outputs.push_back((fs::path(outdir) / "ray_xz.csv").string());
        readme << "- ray_xz.csv: s, x, z - xz-slice polyline of the traced ray (one row per sample).\n";
        readme << "- ray_b0.csv: s, b0 - leading amplitude decay along the ray.\n";
    }
    if (!samples_path.empty()) {
        manifest.inputs.push_back(samples_path);
        auto samples = read_samples_csv(samples_path);
        double lo = 0.0, hi = 0.0;
        for (const auto& s : samples) {
            lo = std::min(lo, s.value);
            hi = std::max(hi, s.value);
        }
        if (hi <= lo) hi = lo + 1.0;
        const int nbins = 32;
        std::vector<size_t> counts(nbins, 0);
        for (const auto& s : samples) {
            int b = static_cast<int>((s.value - lo) / (hi - lo) * nbins);
            b = std::min(std::max(b, 0), nbins - 1);
            ++counts[static_cast<size_t>(b)];
        }
        std::vector<std::vector<double>> rows;
        for (int b = 0; b < nbins; ++b)
            rows.push_back({lo + (hi - lo) * b / nbins, lo + (hi - lo) * (b + 1) / nbins,
                            static_cast<double>(counts[static_cast<size_t>(b)])});
        write_csv((fs::path(outdir) / "samples_hist.csv").string(), {"bin_lo", "bin_hi", "count"},
                  rows);
        manifest.outputs.push_back((fs::path(outdir) / "samples_hist.csv").string());
        readme << "- samples_hist.csv: bin_lo, bin_hi, count - histogram of transform sample values.\n";
    }
    if (!diag_path.empty()) {
        manifest.inputs.push_back(diag_path);
        std::vector<std::string> header;
        auto rows = read_numeric_csv(diag_path, &header);
        for (size_t i = 1; i < rows.size(); ++i)
            if (rows[i][1] > rows[i - 1][1] * (1.0 + 1e-12)) {
                std::ostringstream msg;
                msg << "plot-data: residual column is not non-increasing at iteration "
                    << rows[i][0];
                throw std::runtime_error(msg.str());
            }
        write_csv((fs::path(outdir) / "residuals.csv").string(), {"iteration", "residual"}, rows);
        manifest.outputs.push_back((fs::path(outdir) / "residuals.csv").string());
        readme << "- residuals.csv: iteration, residual - solver residual curve (verified non-increasing).\n";
    }
    if (!cert_path.empty()) {
        manifest.inputs.push_back(cert_path);
        json cert = json::parse(read_file(cert_path));
        std::vector<std::string> header = {"l2_norm", "linf_norm", "pde_residual",
                                           "degenerate_fraction", "verdict_pass",
                                           "quadratic_remainder"};
        std::vector<std::vector<double>> rows = {
            {cert.at("l2_norm").get<double>(), cert.at("linf_norm").get<double>(),
             cert.at("pde_residual").get<double>(), cert.at("degenerate_fraction").get<double>(),
             cert.at("verdict").get<std::string>() == "pass" ? 1.0 : 0.0,
             cert.at("quadratic_remainder").get<double>()}};
        write_csv((fs::path(outdir) / "cert_summary.csv").string(), header, rows);
        manifest.outputs.push_back((fs::path(outdir) / "cert_summary.csv").string());
        readme << "- cert_summary.csv: one row with the certificate scalars.\n";
    }
    if (!beta_path.empty()) {
        manifest.inputs.push_back(beta_path);
        GridField beta = read_sgf(beta_path);
        int kmid = beta.grid.dims[2] / 2;
        std::vector<std::vector<double>> rows;
        for (int j = 0; j < beta.grid.dims[1]; ++j)
            for (int i = 0; i < beta.grid.dims[0]; ++i) {
                size_t n = beta.grid.lin(i, j, kmid);
                Vec3 p = beta.grid.position(i, j, kmid);
                rows.push_back({p.x, p.y, beta.valid(n) ? beta.at(n, 0) : 0.0});
            }
        write_csv((fs::path(outdir) / "beta_slice.csv").string(), {"x", "y", "value"}, rows);
        manifest.outputs.push_back((fs::path(outdir) / "beta_slice.csv").string());
        readme << "- beta_slice.csv: x, y, value - mid-depth slice of the recovered field.\n";
    }
    if (manifest.outputs.empty()) throw CLI::ValidationError("plot-data", "no inputs given");

    std::ofstream rm(fs::path(outdir) / "README.md", std::ios::trunc);
    rm << readme.str();
    return 0;
}

}  // namespace

int run(const std::vector<std::string>& args) {
    CLI::App cli{"elastoray: ray, transform, and uniqueness-certificate toolkit for isotropic "
                 "elastic media"};
    cli.require_subcommand(0, 1);

    // admissible
    auto* adm = cli.add_subcommand("admissible", "Check medium admissibility over the grid");
    std::string adm_config, adm_out;
    adm->add_option("--config", adm_config, "model config JSON")->required();
    adm->add_option("--out", adm_out, "write the report JSON here");

    // trace
    auto* trc = cli.add_subcommand("trace", "Integrate a single ray and its amplitude");
    std::string trc_config, trc_x0, trc_xi0, trc_mode = "p", trc_sign = "plus", trc_out;
    double trc_step = 1e-3, trc_fan = 1e-3;
    trc->add_option("--config", trc_config)->required();
    trc->add_option("--x0", trc_x0, "launch point a,b,c")->required();
    trc->add_option("--xi0", trc_xi0, "launch covector a,b,c")->required();
    trc->add_option("--mode", trc_mode, "p or s")->check(CLI::IsMember({"p", "s"}));
    trc->add_option("--sign", trc_sign, "plus or minus")->check(CLI::IsMember({"plus", "minus"}));
    trc->add_option("--step", trc_step, "arclength step");
    trc->add_option("--fan-offset", trc_fan, "transverse offset for the amplitude fan");
    trc->add_option("--out", trc_out, "ray CSV")->required();

    // eikonal
    auto* eik = cli.add_subcommand("eikonal", "First-arrival travel times on the grid");
    std::string eik_config, eik_source, eik_mode = "p", eik_out;
    eik->add_option("--config", eik_config)->required();
    eik->add_option("--source", eik_source, "point source a,b,c")->required();
    eik->add_option("--mode", eik_mode)->check(CLI::IsMember({"p", "s"}));
    eik->add_option("--out", eik_out, "travel-time SGF")->required();

    // fan
    auto* fan = cli.add_subcommand("fan", "Generate a ray fan with endpoints on S");
    std::string fan_config, fan_out, fan_center = "0,0,0";
    int fan_seeds = 32, fan_dirs = 64;
    double fan_step = 2e-3;
    unsigned fan_seed = 0;
    fan->add_option("--config", fan_config)->required();
    fan->add_option("--seeds", fan_seeds, "seed points on S");
    fan->add_option("--dirs", fan_dirs, "directions per seed");
    fan->add_option("--step", fan_step, "arclength step");
    fan->add_option("--seed", fan_seed, "jitter seed (0 = none)");
    fan->add_option("--center", fan_center, "hint a,b,c for locating the S patch");
    fan->add_option("--out", fan_out, "fan JSON")->required();

    // build-b
    auto* bb = cli.add_subcommand("build-b", "Assemble the model-difference tensor");
    std::string bb_c1, bb_c2, bb_out;
    bb->add_option("--config1", bb_c1)->required();
    bb->add_option("--config2", bb_c2)->required();
    bb->add_option("--out", bb_out, "6-component SGF")->required();

    // sv
    auto* sv = cli.add_subcommand("sv", "Apply the Saint-Venant operator to a tensor field");
    std::string sv_in, sv_out;
    sv->add_option("--in", sv_in, "6-component SGF")->required();
    sv->add_option("--out", sv_out, "21-component SGF")->required();

    // t4
    auto* t4 = cli.add_subcommand("t4", "Fourth-order two-term functional of a density pair");
    std::string t4_c1, t4_c2, t4_out;
    t4->add_option("--config1", t4_c1)->required();
    t4->add_option("--config2", t4_c2)->required();
    t4->add_option("--out", t4_out, "1-component SGF")->required();

    // transform
    auto* tr = cli.add_subcommand("transform", "Ray transform of a tensor field over a fan");
    std::string tr_in, tr_fan, tr_out;
    tr->add_option("--in", tr_in, "6-component SGF")->required();
    tr->add_option("--fan", tr_fan, "fan JSON")->required();
    tr->add_option("--out", tr_out, "samples CSV")->required();

    // invert
    auto* inv = cli.add_subcommand("invert", "Regularized least-squares inversion of samples");
    std::string inv_fan, inv_samples, inv_out, inv_diag;
    double inv_reg = -1.0;
    inv->add_option("--fan", inv_fan)->required();
    inv->add_option("--samples", inv_samples)->required();
    inv->add_option("--reg", inv_reg, "Tikhonov weight (default: scaled automatically)");
    inv->add_option("--out", inv_out, "estimate SGF")->required();
    inv->add_option("--diag", inv_diag, "residual curve CSV");

    // certify
    auto* cert = cli.add_subcommand("certify", "Density-uniqueness certificate from transform data");
    std::string cert_config, cert_rho2, cert_fan, cert_samples, cert_out, cert_beta;
    cert->add_option("--config", cert_config)->required();
    cert->add_option("--rho2", cert_rho2, "background density SGF")->required();
    cert->add_option("--fan", cert_fan)->required();
    cert->add_option("--samples", cert_samples)->required();
    cert->add_option("--out", cert_out, "certificate JSON")->required();
    cert->add_option("--beta-out", cert_beta, "recovered field SGF");

    // plot-data
    auto* pd = cli.add_subcommand("plot-data", "Emit plot-ready CSV bundles");
    std::string pd_ray, pd_samples, pd_diag, pd_cert, pd_beta, pd_outdir;
    pd->add_option("--ray", pd_ray, "ray CSV from trace");
    pd->add_option("--samples", pd_samples, "samples CSV from transform");
    pd->add_option("--diag", pd_diag, "residual CSV from invert");
    pd->add_option("--cert", pd_cert, "certificate JSON from certify");
    pd->add_option("--beta", pd_beta, "recovered field SGF");
    pd->add_option("--outdir", pd_outdir, "output directory")->required();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        cli.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        std::cout << cli.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    }

    if (cli.get_subcommands().empty()) {
        std::cout << cli.help();
        return 1;
    }

    try {
        if (adm->parsed()) return cmd_admissible(adm_config, adm_out);
        if (trc->parsed())
            return cmd_trace(trc_config, parse_vec3(trc_x0, "--x0"), parse_vec3(trc_xi0, "--xi0"),
                             trc_mode, trc_sign, trc_step, trc_fan, trc_out);
        if (eik->parsed())
            return cmd_eikonal(eik_config, parse_vec3(eik_source, "--source"), eik_mode, eik_out);
        if (fan->parsed())
            return cmd_fan(fan_config, fan_seeds, fan_dirs, fan_step, fan_seed,
                           parse_vec3(fan_center, "--center"), fan_out);
        if (bb->parsed()) return cmd_build_b(bb_c1, bb_c2, bb_out);
        if (sv->parsed()) return cmd_sv(sv_in, sv_out);
        if (t4->parsed()) return cmd_t4(t4_c1, t4_c2, t4_out);
        if (tr->parsed()) return cmd_transform(tr_in, tr_fan, tr_out);
        if (inv->parsed()) return cmd_invert(inv_fan, inv_samples, inv_reg, inv_out, inv_diag);
        if (cert->parsed())
            return cmd_certify(cert_config, cert_rho2, cert_fan, cert_samples, cert_out, cert_beta);
        if (pd->parsed())
            return cmd_plot_data(pd_ray, pd_samples, pd_diag, pd_cert, pd_beta, pd_outdir);
    } catch (const CLI::ValidationError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    std::cout << cli.help();
    return 1;
}

}  // namespace elastoray::app
