// End-to-end checks of the rfeik binary: exit codes, key=value output lines,
// and file round trips. Takes the binary path as argv[1].

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "randers/field_io.hpp"
#include "randers/inversion.hpp"
#include "randers/sweeper.hpp"

using namespace randers;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void check(bool ok, const std::string& what) {
    std::printf("%s %s\n", ok ? "[ok]" : "[FAIL]", what.c_str());
    if (!ok) ++failures;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct Runner {
    std::string binary;
    fs::path dir;

    int run(const std::string& args, std::string* out = nullptr, std::string* err = nullptr) {
        const fs::path out_path = dir / "stdout.txt";
        const fs::path err_path = dir / "stderr.txt";
        const std::string cmd =
            binary + " " + args + " > " + out_path.string() + " 2> " + err_path.string();
        const int status = std::system(cmd.c_str());
        if (out) *out = slurp(out_path);
        if (err) *err = slurp(err_path);
        return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    }
};

void write_observation_bundle(const fs::path& path, const ObservationSet& obs) {
    const int rows = obs.observed.rows(), cols = obs.observed.cols();
    Grid2D<double> src(rows, cols, 0.0), mask(rows, cols, 0.0), reserved(rows, cols, 0.0);
    for (size_t i = 0; i < src.size(); ++i) {
        src[i] = obs.sources.mask[i] ? 1.0 : 0.0;
        mask[i] = obs.observed[i] ? 1.0 : 0.0;
    }
    write_field(path, {src, mask, obs.values, reserved});
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::fprintf(stderr, "usage: cli_checks <rfeik-path>\n");
        return 1;
    }
    Runner r;
    r.binary = argv[1];
    r.dir = fs::temp_directory_path() / "rfeik_cli_checks";
    fs::remove_all(r.dir);
    fs::create_directories(r.dir);
    const std::string d = r.dir.string() + "/";

    // shared inputs: 64x64 isotropic problem
    const int n = 64;
    const GridSpec spec{n, n, 1.0 / n};
    const MetricField g(n, n, 1.0);
    const DriftField b(n, n);
    const SourceMask src = SourceMask::point(n, n, n / 2, n / 2);
    write_metric(d + "metric.rfk", g);
    write_drift(d + "drift.rfk", b);
    write_mask(d + "sources.rfk", src);

    {
        std::string out;
        const int code = r.run("solve --metric " + d + "metric.rfk --drift " + d +
                                   "drift.rfk --sources " + d + "sources.rfk --h " +
                                   std::to_string(1.0 / n) + " --out " + d + "arrival.rfk",
                               &out);
        check(code == 0, "solve exits 0 on convergence");
        check(out.find("iters=") == 0, "solve prints iters= summary");
        const ArrivalField t_file = read_arrival(d + "arrival.rfk");
        auto [t_mem, rep] = solve(g, b, src, spec);
        bool identical = true;
        for (size_t i = 0; i < t_mem.t.size(); ++i) identical &= t_file.t[i] == t_mem.t[i];
        check(identical, "solve output matches the in-process field");
    }
    {
        r.run("solve --metric " + d + "metric.rfk --drift " + d + "drift.rfk --sources " + d +
              "sources.rfk --out " + d + "s1.rfk");
        const int code = r.run("solve --metric " + d + "metric.rfk --drift " + d +
                               "drift.rfk --sources " + d + "sources.rfk --out " + d +
                               "s2.rfk --solver jacobi");
        check(code == 0, "jacobi solve exits 0");
        const ArrivalField a1 = read_arrival(d + "s1.rfk");
        const ArrivalField a2 = read_arrival(d + "s2.rfk");
        double gap = 0.0;
        for (size_t i = 0; i < a1.t.size(); ++i)
            gap = std::max(gap, std::abs(a1.t[i] - a2.t[i]));
        check(gap < 1e-5, "sweep and jacobi agree within 10x tolerance");
    }
    {
        std::string err;
        write_metric(d + "small.rfk", MetricField(8, 8, 1.0));
        const int code = r.run("solve --metric " + d + "small.rfk --drift " + d +
                                   "drift.rfk --sources " + d + "sources.rfk --out " + d +
                                   "x.rfk",
                               nullptr, &err);
        check(code == 2, "dimension mismatch exits 2");
        check(err.find("dimension mismatch") != std::string::npos,
              "dimension mismatch message on stderr");
    }
    {
        const int code = r.run("solve --metric " + d + "metric.rfk --drift " + d +
                               "drift.rfk --sources " + d + "sources.rfk --out " + d +
                               "nc.rfk --max-iters 1 --solver jacobi");
        check(code == 3, "iteration-capped solve exits 3");
    }
    {
        std::string out;
        const int code = r.run("gradcheck --case iso --points 5 --seed 3", &out);
        check(code == 0, "gradcheck iso exits 0");
        check(out.find("result=PASS") != std::string::npos, "gradcheck reports PASS");
        const int bad = r.run("gradcheck --case iso --points 0");
        check(bad == 2, "gradcheck with zero points exits 2");
    }
    {
        // small inversion end to end with a generated bundle
        const int m = 48;
        const GridSpec ispec{m, m, 1.0 / m};
        MetricField gtrue(m, m, 1.0);
        for (int rr = 0; rr < m; ++rr)
            for (int cc = m / 2; cc < m; ++cc) {
                gtrue.g11(rr, cc) = 2.0;
                gtrue.g22(rr, cc) = 2.0;
            }
        const std::vector<SourceMask> srcs = {SourceMask::point(m, m, m / 2, m / 2)};
        const auto obs = generate_observations(gtrue, DriftField(m, m), srcs, ispec, 1.0, 0.0, 7);
        write_observation_bundle(d + "bundle.rfk", obs[0]);
        write_field(d + "truth_g.rfk", {gtrue.g11});

        std::string out;
        const int code = r.run("invert --obs " + d + "bundle.rfk --param iso --iters 120 --h " +
                                   std::to_string(1.0 / m) + " --truth " + d +
                                   "truth_g.rfk --out-prefix " + d + "rec",
                               &out);
        check(code == 0, "invert exits 0");
        check(out.find("loss=") != std::string::npos, "invert prints the final loss");
        check(fs::exists(d + "rec_metric.rfk"), "invert writes the recovered metric");
        check(fs::exists(d + "rec_history.csv"), "invert writes the history csv");
        const auto pos = out.find("rel_error=");
        double rel = 1e9;
        if (pos != std::string::npos) rel = std::stod(out.substr(pos + 10));
        check(rel < 0.25, "invert improves the relative error");

        // joint recovery over two bundles
        const std::vector<SourceMask> srcs2 = {SourceMask::point(m, m, m / 4, m / 4),
                                               SourceMask::point(m, m, 3 * m / 4, 3 * m / 4)};
        const auto obs2 =
            generate_observations(gtrue, DriftField(m, m), srcs2, ispec, 0.2, 0.0, 9);
        write_observation_bundle(d + "bundle_a.rfk", obs2[0]);
        write_observation_bundle(d + "bundle_b.rfk", obs2[1]);
        const int code2 = r.run("invert --obs " + d + "bundle_a.rfk " + d +
                                "bundle_b.rfk --param iso --iters 30 --h " +
                                std::to_string(1.0 / m) + " --out-prefix " + d + "rec2");
        check(code2 == 0, "invert accepts multiple observation bundles");
    }
    {
        std::string out;
        const int code =
            r.run("convergence --sizes 25,50,100 --case iso --out " + d + "conv.csv", &out);
        check(code == 0, "convergence exits 0");
        check(fs::exists(d + "conv.csv"), "convergence writes csv");
        const int bad = r.run("convergence --sizes 50 --case iso --out " + d + "c1.csv");
        check(bad == 2, "single-size convergence exits 2");
    }
    {
        const int code =
            r.run("scenario --kind terrain --size 32 --alpha 0 --out-prefix " + d + "terr");
        check(code == 0, "scenario terrain exits 0");
        const MetricField tm = read_metric(d + "terr_metric.rfk");
        bool ones = true;
        for (size_t i = 0; i < tm.g11.size(); ++i) ones &= tm.g11[i] == 1.0 && tm.g12[i] == 0.0;
        check(ones, "flat terrain produces the unit metric");
        const int bad = r.run("scenario --kind volcano --out-prefix " + d + "x");
        check(bad == 2, "unknown scenario kind exits 2");
    }
    {
        const int code = r.run("bench --sizes 16,24 --repeat 1 --out " + d + "bench.csv");
        check(code == 0, "bench exits 0");
        check(fs::exists(d + "bench.csv"), "bench writes csv");
        const int bad = r.run("bench --sizes 16 --repeat 0 --out " + d + "b0.csv");
        check(bad == 2, "bench with repeat 0 exits 2");
    }

    std::printf("cli checks: %d failure(s)\n", failures);
    return failures;
}
