#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#ifndef WKAM_CLI_PATH
#define WKAM_CLI_PATH "wkam"
#endif
#ifndef WKAM_SYSTEMS_DIR
#define WKAM_SYSTEMS_DIR "systems"
#endif

namespace fs = std::filesystem;

namespace {

int run_cli(const std::string& args) {
    const std::string cmd = std::string(WKAM_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WEXITSTATUS(rc);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string sys_path(const char* name) {
    return std::string(WKAM_SYSTEMS_DIR) + "/" + name;
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) : path(fs::temp_directory_path() / tag) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("cli: solve writes field and report, byte-identical on rerun") {
    TempDir d1("wkam_cli_det1"), d2("wkam_cli_det2");
    const std::string base = "solve --system " + sys_path("pendulum.json") +
                             " --c 0 --grid 128 --out ";
    REQUIRE(run_cli(base + d1.path.string()) == 0);
    REQUIRE(run_cli(base + d2.path.string()) == 0);
    CHECK(slurp(d1.path / "u.csv") == slurp(d2.path / "u.csv"));
    CHECK(slurp(d1.path / "report.json") == slurp(d2.path / "report.json"));
    CHECK(slurp(d1.path / "u.csv").find("backward_solution") != std::string::npos);
}

TEST_CASE("cli: alpha sweep on the flat system matches |c|^2/2") {
    TempDir d("wkam_cli_alpha");
    const int rc = run_cli("alpha --system " + sys_path("flat.json") +
                           " --c 0,0 --c 0.25,0 --c 0.5,0 --c 0.75,0 --c 1,0 --grid 64"
                           " --dt 0.1 --out " + d.path.string());
    REQUIRE(rc == 0);
    std::ifstream in(d.path / "alpha.csv");
    std::string header;
    std::getline(in, header);
    CHECK(header == "c1,c2,alpha,residual,iterations");
    double c1 = 0.0, c2 = 0.0, alpha = 0.0, res = 0.0;
    int iters = 0;
    char comma;
    int rows = 0;
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        ls >> c1 >> comma >> c2 >> comma >> alpha >> comma >> res >> comma >> iters;
        CHECK(std::abs(alpha - 0.5 * c1 * c1) < 1e-3);
        ++rows;
    }
    CHECK(rows == 5);
}

TEST_CASE("cli: exit codes for config errors") {
    CHECK(run_cli("solve --c 0 --grid 128") == 2);  // missing --system
    CHECK(run_cli("solve --system " + sys_path("pendulum.json") + " --c 0 --grid 100") == 2);
    CHECK(run_cli("solve --system " + sys_path("pendulum.json") + " --c 0 --grid 1024") == 2);
    CHECK(run_cli("solve --system /nonexistent.json --c 0 --grid 128") == 2);
    CHECK(run_cli("nonsense") == 2);
    TempDir d("wkam_cli_badtol");
    CHECK(run_cli("solve --system " + sys_path("pendulum.json") +
                  " --c 0 --grid 128 --tol-fp -1 --out " + d.path.string()) == 2);
}

TEST_CASE("cli: singular and superdiff outputs on the pendulum") {
    TempDir d("wkam_cli_sing");
    REQUIRE(run_cli("singular --system " + sys_path("pendulum.json") +
                    " --c 0 --grid 256 --out " + d.path.string()) == 0);
    const std::string csv = slurp(d.path / "singular.csv");
    CHECK(csv.find("0.5") != std::string::npos);

    REQUIRE(run_cli("superdiff --system " + sys_path("pendulum.json") +
                    " --c 0 --grid 256 --at 0.5 --out " + d.path.string()) == 0);
    const std::string sd = slurp(d.path / "superdiff.json");
    CHECK(sd.find("\"regular\": false") != std::string::npos);
}

TEST_CASE("cli: char, flow, barrier, homoclinic produce their documented files") {
    TempDir d("wkam_cli_files");
    REQUIRE(run_cli("char --system " + sys_path("separable2d.json") +
                    " --c 0,0.8 --grid 64 --from 0.5,0.25 --tau 0.5 --out " +
                    d.path.string()) == 0);
    CHECK(fs::exists(d.path / "char.csv"));

    REQUIRE(run_cli("flow --system " + sys_path("pendulum.json") +
                    " --c 0 --grid 64 --from 0.5 --p0 2.0 --tau 5 --out " + d.path.string()) ==
            0);
    CHECK(fs::exists(d.path / "flow.csv"));

    REQUIRE(run_cli("barrier --system " + sys_path("pendulum.json") +
                    " --c 0 --grid 256 --out " + d.path.string()) == 0);
    CHECK(fs::exists(d.path / "barrier.csv"));
    CHECK(fs::exists(d.path / "aubry.json"));
    CHECK(fs::exists(d.path / "classes.json"));
    CHECK(fs::exists(d.path / "dc.csv"));

    REQUIRE(run_cli("homoclinic --system " + sys_path("pendulum.json") +
                    " --c 0 --grid 256 --at 0.5 --out " + d.path.string()) == 0);
    CHECK(fs::exists(d.path / "homoclinic.csv"));
    const std::string hj = slurp(d.path / "homoclinic.json");
    CHECK(hj.find("\"settled\": true") != std::string::npos);
}

TEST_CASE("cli: validate passes on the reference systems") {
    TempDir d("wkam_cli_validate");
    CHECK(run_cli("validate --system " + sys_path("pendulum.json") + " --c 0 --grid 128 --out " +
                  d.path.string()) == 0);
    CHECK(run_cli("validate --system " + sys_path("flat.json") + " --c 0.7,0 --grid 32 --dt 0.1"
                  " --out " + d.path.string()) == 0);
}
