#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "hopnet/config.hpp"

using namespace hopnet;
namespace fs = std::filesystem;

namespace {

// --- configuration file unit tests use the library directly ----------------

// --- subprocess helpers for the installed binary ---------------------------

std::string cli_path() {
#ifdef HOPNET_CLI_PATH
    return HOPNET_CLI_PATH;
#else
    const char* p = std::getenv("HOPNET_CLI_PATH");
    REQUIRE_MESSAGE(p != nullptr, "HOPNET_CLI_PATH must point at the CLI binary");
    return p;
#endif
}

struct RunOutcome {
    int exit_code = -1;
    std::string err;
};

fs::path fresh_dir(const std::string& tag) {
    const fs::path d = fs::temp_directory_path() / ("hopnet_cli_" + tag);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    INFO("missing file: ", p.string());
    REQUIRE(bool(f));
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream f(p, std::ios::binary);
    f << text;
}

RunOutcome run_cli(const std::string& args, const fs::path& dir) {
    const fs::path errfile = dir / "stderr.txt";
    const std::string cmd = cli_path() + " " + args + " 2>" + errfile.string();
    const int raw = std::system(cmd.c_str());
    RunOutcome out;
    out.exit_code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    std::ifstream f(errfile, std::ios::binary);
    std::ostringstream os;
    os << f.rdbuf();
    out.err = os.str();
    return out;
}

std::size_t count_lines(const std::string& s) {
    std::size_t n = 0;
    for (char c : s)
        if (c == '\n') ++n;
    return n;
}

} // namespace

TEST_CASE("config parsing: comments, sections, trimming, and failure modes") {
    const Config c = Config::from_text("# a comment\n"
                                       "window.dim = 2   # trailing comment\n"
                                       "\n"
                                       "  model.gamma=0.25\n"
                                       "name = spread out value\n");
    CHECK(c.has("window.dim"));
    CHECK_FALSE(c.has("missing"));
    CHECK(c.get_int("window.dim") == 2);
    CHECK(c.get_double("model.gamma") == 0.25);
    CHECK(c.get_string("name") == "spread out value");

    CHECK_THROWS_AS(Config::from_text("a=1\na=2\n"), std::runtime_error);   // duplicate
    CHECK_THROWS_AS(Config::from_text("just a line\n"), std::runtime_error); // no '='
    CHECK_THROWS_AS(Config::from_text("=5\n"), std::runtime_error);          // empty key
    // the origin and line number appear in the message
    try {
        Config::from_text("ok=1\nbroken\n", "myfile.cfg");
        CHECK(false);
    } catch (const std::runtime_error& e) {
        const std::string msg = e.what();
        CHECK(msg.find("myfile.cfg") != std::string::npos);
        CHECK(msg.find("2") != std::string::npos);
    }
}

TEST_CASE("config typed getters, defaults, and lists") {
    const Config c = Config::from_text("i=-3\nu=7\nd=1.5e2\nb1=true\nb2=0\nb3=yes\n"
                                       "dl=0.5, 1.5 ,2\nil=1,2,3\ns=hello\n");
    CHECK(c.get_int("i") == -3);
    CHECK(c.get_uint("u", 0) == 7);
    CHECK(c.get_double("d") == 150.0);
    CHECK(c.get_bool("b1", false));
    CHECK_FALSE(c.get_bool("b2", true));
    CHECK(c.get_bool("b3", false));
    CHECK(c.get_double_list("dl") == std::vector<double>{0.5, 1.5, 2.0});
    CHECK(c.get_int_list("il") == std::vector<std::int64_t>{1, 2, 3});
    CHECK(c.get_string("s") == "hello");

    CHECK(c.get_int("absent", 42) == 42);
    CHECK(c.get_double("absent", 2.5) == 2.5);
    CHECK(c.get_string("absent", "x") == "x");
    CHECK_THROWS_AS(c.get_int("s"), std::runtime_error);    // not a number
    CHECK_THROWS_AS(c.get_double("s"), std::runtime_error);
    CHECK_THROWS_AS(c.get_int("absent"), std::runtime_error); // required but missing
    CHECK_THROWS_AS(Config::from_text("x=1,,2\n").get_double_list("x"), std::runtime_error);
    CHECK_THROWS_AS(Config::from_text("n=-1\n").get_uint("n", 0), std::runtime_error);
}

TEST_CASE("unread keys are tracked for whitelist validation") {
    const Config c = Config::from_text("a=1\nb=2\nc=3\n");
    (void)c.get_int("a");
    (void)c.get_string("c");
    CHECK(c.unread_keys() == std::vector<std::string>{"b"});
}

TEST_CASE("config hash: canonical over ordering, sensitive to content") {
    const Config a = Config::from_text("x=1\ny=2\n");
    const Config b = Config::from_text("# reordered, commented\ny=2\n\nx=1\n");
    const Config c = Config::from_text("x=1\ny=3\n");
    const Config d = Config::from_text("x=1\nz=2\n");
    CHECK(a.hash() == b.hash());
    CHECK(a.hash_hex() == b.hash_hex());
    CHECK(a.hash() != c.hash());
    CHECK(a.hash() != d.hash());
    CHECK(a.hash_hex().size() == 16);
    CHECK(a.hash_hex().find_first_not_of("0123456789abcdef") == std::string::npos);
}

TEST_CASE("cli: config errors exit 2 with a machine-readable record") {
    const fs::path dir = fresh_dir("errors");

    // missing file: the record names the path
    auto r = run_cli("sample --config " + (dir / "nope.cfg").string(), dir);
    CHECK(r.exit_code == 2);
    CHECK(r.err.find("\"error\":\"config\"") != std::string::npos);
    CHECK(r.err.find("nope.cfg") != std::string::npos);

    // unknown key: refused before any work happens
    write_file(dir / "bad.cfg", "lambda=5\nmodel.gamm=0.5\n");
    r = run_cli("sample --config " + (dir / "bad.cfg").string() + " --out " + dir.string(), dir);
    CHECK(r.exit_code == 2);
    CHECK(r.err.find("model.gamm") != std::string::npos);

    // malformed value
    write_file(dir / "bad2.cfg", "lambda=plenty\n");
    r = run_cli("sample --config " + (dir / "bad2.cfg").string() + " --out " + dir.string(), dir);
    CHECK(r.exit_code == 2);
}

TEST_CASE("cli: sampling is deterministic and hash-stamped") {
    const fs::path dir = fresh_dir("sample");
    const std::string cfg_text = "window.dim=1\nwindow.radius=1\nlambda=30\nseed=5\n";
    write_file(dir / "run.cfg", cfg_text);
    const std::string cfg = (dir / "run.cfg").string();

    auto r = run_cli("sample --config " + cfg + " --out " + (dir / "a").string(), dir);
    REQUIRE(r.exit_code == 0);
    r = run_cli("sample --config " + cfg + " --out " + (dir / "b").string(), dir);
    REQUIRE(r.exit_code == 0);
    const std::string a = slurp(dir / "a" / "points.csv");
    const std::string b = slurp(dir / "b" / "points.csv");
    CHECK(a == b); // byte-identical reruns

    const Config parsed = Config::from_text(cfg_text);
    CHECK(a.rfind("# config_hash=" + parsed.hash_hex() + "\n", 0) == 0);
    CHECK(a.find("index,x0") != std::string::npos);

    // a seed override changes the draw and is reflected in the file name-free
    // content (the hash line stays, the points differ)
    r = run_cli("sample --config " + cfg + " --seed 6 --out " + (dir / "c").string(), dir);
    REQUIRE(r.exit_code == 0);
    const std::string c = slurp(dir / "c" / "points.csv");
    CHECK(c != a);
    CHECK(c.rfind("# config_hash=", 0) == 0);
}

TEST_CASE("cli: chain traces have a header record and ceil(steps/thin) rows") {
    const fs::path dir = fresh_dir("mcmc");
    write_file(dir / "run.cfg", "window.dim=1\nwindow.radius=1\nlambda=6\nseed=3\n"
                                "model.gamma=0.8\nmodel.beta=0.3\nmodel.k_max=2\n"
                                "mcmc.steps=50\nmcmc.thin=7\n");
    auto r = run_cli("mcmc --config " + (dir / "run.cfg").string() + " --out " + dir.string(), dir);
    REQUIRE(r.exit_code == 0);

    const std::string trace = slurp(dir / "trace_r0.ndjson");
    CHECK(count_lines(trace) == 1 + 8); // header record + ceil(50/7)
    std::istringstream ts(trace);
    std::string line;
    std::getline(ts, line);
    CHECK(line.find("\"config_hash\"") != std::string::npos);
    CHECK(line.find("\"columns\"") != std::string::npos);
    std::getline(ts, line);
    CHECK(line.rfind("{\"step\":0,", 0) == 0);
    CHECK(line.find("\"gamma_t\":") != std::string::npos);
    CHECK(line.find("\"beta_t\":") != std::string::npos);
    CHECK(line.find("\"S\":") != std::string::npos);
    CHECK(line.find("\"M\":") != std::string::npos);
    CHECK(line.find("\"accepted\":") != std::string::npos);

    const std::string summary = slurp(dir / "mcmc_summary.csv");
    CHECK(summary.rfind("# config_hash=", 0) == 0);
    CHECK(summary.find("replica,n_points,steps,acceptance_rate") != std::string::npos);
    CHECK(count_lines(summary) == 3); // hash + columns + one replica
}

TEST_CASE("cli: free-energy table has one row per lambda-delta pair") {
    const fs::path dir = fresh_dir("fe");
    write_file(dir / "run.cfg", "window.dim=1\nwindow.radius=1\nseed=2\n"
                                "model.gamma=0.5\nmodel.k_max=2\n"
                                "lambda.list=20,60\ngrid.per_axis_list=1,3\nseeds.count=2\n");
    auto r = run_cli("free-energy --config " + (dir / "run.cfg").string() + " --out " +
                         dir.string(),
                     dir);
    REQUIRE(r.exit_code == 0);
    const std::string table = slurp(dir / "free_energy.csv");
    CHECK(table.rfind("# config_hash=", 0) == 0);
    CHECK(count_lines(table) == 2 + 4); // hash + header + 2 lambdas x 2 grids
    CHECK(table.find("lambda,delta,seeds,mean_log_Z_rate,neg_variational,gap") != std::string::npos);
}

TEST_CASE("cli: enumeration budgets refuse with exit 3") {
    const fs::path dir = fresh_dir("budget");
    write_file(dir / "run.cfg", "window.dim=1\nwindow.radius=1\nlambda=12\nseed=4\n"
                                "model.gamma=0.5\nmodel.k_max=3\ngrid.per_axis=3\n"
                                "budget.enumeration=50\n");
    auto r = run_cli("count-check --config " + (dir / "run.cfg").string() + " --out " +
                         dir.string(),
                     dir);
    CHECK(r.exit_code == 3);
    CHECK(r.err.find("\"error\":\"budget\"") != std::string::npos);
}

TEST_CASE("cli: strict mode turns non-convergence into exit 4") {
    const fs::path dir = fresh_dir("strict");
    write_file(dir / "run.cfg", "window.dim=1\nwindow.radius=1\nlambda=5\nseed=1\n"
                                "model.gamma=0.5\nmodel.beta=0.6\nmodel.k_max=2\n"
                                "grid.per_axis=3\nsolver.max_iter=1\n");
    const std::string cfg = (dir / "run.cfg").string();
    auto r = run_cli("solve --config " + cfg + " --strict --out " + (dir / "s").string(), dir);
    CHECK(r.exit_code == 4);
    CHECK(r.err.find("\"error\":\"no-convergence\"") != std::string::npos);

    // without --strict the run reports the unconverged state instead
    r = run_cli("solve --config " + cfg + " --out " + (dir / "ns").string(), dir);
    CHECK(r.exit_code == 0);
    const std::string info = slurp(dir / "ns" / "solve_info.csv");
    CHECK(info.find("fixed-point,0,") != std::string::npos); // converged=0 recorded
}

TEST_CASE("cli: solve then functionals round-trips the setting file") {
    const fs::path dir = fresh_dir("roundtrip");
    write_file(dir / "solve.cfg", "window.dim=1\nwindow.radius=1\nlambda=5\nseed=1\n"
                                  "model.gamma=0.5\nmodel.k_max=2\ngrid.per_axis=3\n");
    const std::string solve_cfg = (dir / "solve.cfg").string();
    auto r = run_cli("solve --config " + solve_cfg + " --out " + (dir / "s").string(), dir);
    REQUIRE(r.exit_code == 0);

    // feed the emitted setting back through the functionals subcommand
    write_file(dir / "func.cfg", "window.dim=1\nwindow.radius=1\nlambda=5\nseed=1\n"
                                 "model.gamma=0.5\nmodel.k_max=2\ngrid.per_axis=3\n"
                                 "functionals.input=" + (dir / "s" / "setting.csv").string() +
                                 "\n");
    r = run_cli("functionals --config " + (dir / "func.cfg").string() + " --out " +
                    (dir / "f").string(),
                dir);
    REQUIRE(r.exit_code == 0);
    const std::string vals = slurp(dir / "f" / "functionals.csv");
    CHECK(vals.rfind("# config_hash=", 0) == 0);
    CHECK(vals.find("I,I_alt,S,M,J,objective") != std::string::npos);
    CHECK(count_lines(vals) == 3);

    // byte-determinism of the whole solve pipeline
    r = run_cli("solve --config " + solve_cfg + " --out " + (dir / "s2").string(), dir);
    REQUIRE(r.exit_code == 0);
    CHECK(slurp(dir / "s" / "setting.csv") == slurp(dir / "s2" / "setting.csv"));
    CHECK(slurp(dir / "s" / "solve_info.csv") == slurp(dir / "s2" / "solve_info.csv"));
}
