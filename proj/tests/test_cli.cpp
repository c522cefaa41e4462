#include "doctest.h"

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <unistd.h>

namespace fs = std::filesystem;

namespace {

struct Run {
    int code = -1;
    std::string out;
};

Run run(const std::string& args) {
    const std::string cmd = std::string("\"") + OLEDMAG_CLI + "\" --threads 2 " + args + " 2>&1";
    Run r;
    FILE* p = ::popen(cmd.c_str(), "r");
    REQUIRE(p != nullptr);
    std::array<char, 4096> buf{};
    std::size_t n;
    while ((n = std::fread(buf.data(), 1, buf.size(), p)) > 0) r.out.append(buf.data(), n);
    const int status = ::pclose(p);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

struct Workdir {
    fs::path dir;
    Workdir() {
        dir = fs::temp_directory_path() / ("oledmag_cli_" + std::to_string(::getpid()));
        fs::create_directories(dir);
    }
    ~Workdir() { fs::remove_all(dir); }
    std::string file(const std::string& name, const std::string& content) const {
        const fs::path p = dir / name;
        std::ofstream(p) << content;
        return p.string();
    }
    std::string path(const std::string& name) const { return (dir / name).string(); }
};

std::string slurp(const std::string& path) {
    std::ifstream f(path);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("gradient formula") {
    const Run r = run("gradient --eq7 --delta-b 1e-6 --w 1e-6 --dx 1e-6");
    CHECK(r.code == 0);
    CHECK(r.out.find("2.44948974278317") != std::string::npos);
    CHECK(run("gradient --eq7 --delta-b 1e-6 --w 2e-6 --dx 1e-6").code == 1);
    CHECK(run("gradient --eq7 --delta-b 1e-6 --w 0 --dx 1e-6").code == 1);
}

TEST_CASE("usage errors") {
    CHECK(run("").code == 1);
    CHECK(run("frobnicate").code == 1);
    CHECK(run("gradient --no-such-flag").code == 1);
    CHECK(run("--threads -2 gradient").code == 1);
    CHECK(run("selftest --only 999").code == 1);
}

TEST_CASE("data and io errors") {
    Workdir w;
    CHECK(run("compare /nonexistent/a.csv /nonexistent/b.csv").code == 2);
    const std::string junk = w.file("junk.stk", "not a stack");
    const Run r = run("analyze --stack " + junk);
    CHECK(r.code == 2);
    CHECK(r.out.find("byte 0") != std::string::npos);
    const std::string bad = w.file("bad.json", R"({"acquisition": {"widht": 4}})");
    const Run s = run("synth --scenario " + bad + " --out " + w.path("x.stk"));
    CHECK(s.code == 2);
    CHECK(s.out.find("widht") != std::string::npos);
}

TEST_CASE("compare") {
    Workdir w;
    const std::string a = w.file("a.csv", "x,value\n0,1\n1,2\n2,4\n");
    const std::string b = w.file("b.csv", "x,value\n0,2\n1,4\n2,8\n");
    const std::string c = w.file("c.csv", "x,value\n0,1\n1,2\n");
    Run r = run("compare " + a + " " + a);
    CHECK(r.code == 0);
    CHECK(r.out.find("similarity 1.000000") != std::string::npos);
    r = run("compare " + a + " " + b);
    CHECK(r.code == 0);
    CHECK(r.out.find("similarity 1.000000") == std::string::npos);
    CHECK(run("compare " + a + " " + c).code != 0);
}

TEST_CASE("synth, analyze and gradient on a small noiseless stack") {
    Workdir w;
    const std::string sc = w.file("s.json", R"({"acquisition": {"width": 30, "height": 30, "noise_scale": 0,
        "wobble": {"amplitude": 0}, "brightness": {"uniform": true}},
        "field": {"kind": "gradient", "center_t": 0.0272, "gradient_t_per_m": 20.0}})");
    const std::string stk = w.path("s.stk");
    REQUIRE(run("synth --scenario " + sc + " --out " + stk).code == 0);
    const Run a = run("analyze --stack " + stk + " --scenario " + sc + " --out-dir " + w.path("out"));
    REQUIRE(a.code == 0);
    CHECK(a.out.find("map dims 10x10") != std::string::npos);
    for (const char* f : {"resonance.csv", "se.csv", "field.csv", "gated_resonance.csv", "gated_field.csv"})
        CHECK(fs::exists(w.dir / "out" / f));
    const std::string field = slurp(w.path("out/field.csv"));
    CHECK(field.rfind("i,j,x_m,y_m,value,se,valid\n", 0) == 0);
    const Run g = run("gradient --map " + w.path("out/field.csv"));
    CHECK(g.code == 0);
    CHECK(g.out.find("G 20 T/m") != std::string::npos);

    const Run n = run("analyze --stack " + stk + " --n 5");
    CHECK(n.code == 0);
    CHECK(n.out.find("map dims 6x6") != std::string::npos);
}

TEST_CASE("scan output compares against itself") {
    Workdir w;
    const std::string out = w.path("scan.csv");
    const Run r = run("scan --out " + out);
    REQUIRE(r.code == 0);
    CHECK(slurp(out).rfind("position_m,b_measured_T,b_model_T,se_T,detected\n", 0) == 0);
    const Run c = run("compare " + out + " " + out + " --column b_model_T");
    CHECK(c.code == 0);
    CHECK(c.out.find("similarity 1.000000") != std::string::npos);
}

TEST_CASE("sensitivity") {
    const Run r = run("sensitivity --se-hz 28030 --t 1");
    CHECK(r.code == 0);
    CHECK(r.out.find("1 uT") != std::string::npos);
}
