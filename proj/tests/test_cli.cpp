#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "imprel/commands.hpp"

using namespace imprel;
namespace fs = std::filesystem;

namespace
{

struct Run
{
    int code;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args)
{
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

std::string example(const char* name) { return std::string(IMPREL_EXAMPLES_DIR "/") + name; }

fs::path scratch_dir()
{
    const fs::path dir = fs::temp_directory_path() / "imprel_cli_tests";
    fs::create_directories(dir);
    return dir;
}

std::string write_file(const std::string& name, const std::string& text)
{
    const fs::path path = scratch_dir() / name;
    std::ofstream(path) << text;
    return path.string();
}

std::vector<std::string> lines(const std::string& s)
{
    std::vector<std::string> out;
    std::istringstream is(s);
    for (std::string line; std::getline(is, line);)
        out.push_back(line);
    return out;
}

std::vector<std::string> fields(const std::string& line)
{
    std::vector<std::string> out;
    std::istringstream is(line);
    for (std::string f; std::getline(is, f, ',');)
        out.push_back(f);
    if (!line.empty() && line.back() == ',')
        out.emplace_back();
    return out;
}

}  // namespace

TEST_CASE("number formatting and grids")
{
    CHECK(format_number(0.5) == "0.5");
    CHECK(format_number(INFINITY) == "+inf");
    CHECK(format_number(-INFINITY) == "-inf");
    const std::vector<Interval> P{{0, 1}, {10, 20}};
    auto g = parameter_grid(P, {3});
    REQUIRE(g.size() == 9);
    CHECK(g[1](0) == 0);
    CHECK(g[1](1) == 15);
    CHECK(g[3](0) == 0.5);
    g = parameter_grid(P, {1, 2});
    REQUIRE(g.size() == 2);
    CHECK(g[0](0) == 0.5);
    CHECK(g[1](1) == 20);
    CHECK_THROWS_AS(parameter_grid(P, {2, 2, 2}), std::invalid_argument);
    CHECK_THROWS_AS(parameter_grid(P, {0}), std::invalid_argument);
}

TEST_CASE("relax writes a versioned csv")
{
    const Run r = run({"relax", example("vdw.json"), "--grid", "3,2"});
    REQUIRE(r.code == kExitOk);
    const auto ls = lines(r.out);
    REQUIRE(ls.size() == 2 + 6);
    CHECK(ls[0] == "# imprel relax v1 component=1");
    CHECK(ls[1] == "P,T,x_cv,x_cc,x_newton");
    for (std::size_t k = 2; k < ls.size(); ++k) {
        const auto f = fields(ls[k]);
        REQUIRE(f.size() == 5);
        if (f[2] == "+inf")
            continue;
        CHECK(std::stod(f[2]) <= std::stod(f[3]));
        if (!f[4].empty()) {
            CHECK(std::stod(f[2]) <= std::stod(f[4]) + 1e-6);
            CHECK(std::stod(f[4]) <= std::stod(f[3]) + 1e-6);
        }
    }

    const Run one = run({"relax", example("vdw.json"), "--grid", "1"});
    REQUIRE(one.code == kExitOk);
    const auto l1 = lines(one.out);
    REQUIRE(l1.size() == 3);
    CHECK(l1[2].rfind("0.8,285,", 0) == 0);
}

TEST_CASE("output is byte-stable")
{
    for (const std::vector<std::string>& args :
         {std::vector<std::string>{"relax", example("exp_system.json"), "--grid", "4", "--component", "3"},
          std::vector<std::string>{"subgrad", example("cstr.json"), "--point", "0.40,0.0575,8.7"},
          std::vector<std::string>{"verify", example("quadratic_pair.json"), "--samples", "20", "--seed", "3"},
          std::vector<std::string>{"report", example("vdw.json")}}) {
        const Run a = run(args), b = run(args);
        CHECK(a.code == kExitOk);
        CHECK(a.out == b.out);
        CHECK_FALSE(a.out.empty());
    }
}

TEST_CASE("subgrad rows")
{
    Run r = run({"subgrad", example("exp_system.json"), "--point", "0.6,1.348", "--component", "3"});
    REQUIRE(r.code == kExitOk);
    auto ls = lines(r.out);
    REQUIRE(ls.size() == 3);
    CHECK(ls[0] == "# imprel subgrad v1 component=3 sense=cv");
    CHECK(ls[1] == "p1,p2,value,s1,s2,regime,lps_solved,early_stop_stage");
    auto f = fields(ls[2]);
    REQUIRE(f.size() == 8);
    CHECK(f[5] == "np2");
    CHECK(f[6] == "5");
    CHECK(f[7].empty());

    r = run({"subgrad", example("cstr.json"), "--point", "0.40,0.0575,8.7", "--component", "1"});
    REQUIRE(r.code == kExitOk);
    f = fields(lines(r.out)[2]);
    CHECK(f[7] == "ld_sequence");

    r = run({"subgrad", example("quadratic_pair.json"), "--point", "4", "--sense", "cc"});
    REQUIRE(r.code == kExitOk);
    ls = lines(r.out);
    CHECK(ls[0] == "# imprel subgrad v1 component=1 sense=cc");
    f = fields(ls[2]);
    CHECK(f[3] == "np1");
    CHECK(f[4] == "2");

    r = run({"subgrad", example("vdw.json"), "--point", "0.8,290", "--regime", "closed_form"});
    REQUIRE(r.code == kExitOk);
    CHECK(fields(lines(r.out)[2])[5] == "closed_form");
}

TEST_CASE("verify")
{
    Run r = run({"verify", example("vdw.json"), "--samples", "200"});
    CHECK(r.code == kExitOk);
    CHECK(r.out.find("result: pass") != std::string::npos);

    r = run({"verify", example("vdw.json"), "--samples", "0"});
    CHECK(r.code == kExitOk);
    CHECK(r.out.find("result: pass") != std::string::npos);
}

TEST_CASE("a corrupted piece offset fails verification")
{
    const Run rep = run({"report", example("vdw.json")});
    REQUIRE(rep.code == kExitOk);
    const auto ls = lines(rep.out);
    std::size_t header = 0;
    while (header < ls.size() && ls[header].rfind("side,", 0) != 0)
        ++header;
    REQUIRE(header < ls.size());
    CHECK(ls[header] == "side,residual,index,a1,a2,alpha1,b");
    std::string cv, cc;
    bool corrupted = false;
    for (std::size_t k = header + 1; k < ls.size(); ++k) {
        const auto f = fields(ls[k]);
        REQUIRE(f.size() == 7);
        double b = std::stod(f[6]);
        if (f[0] == "cv" && !corrupted) {
            b += 1.0;
            corrupted = true;
        }
        std::ostringstream piece;
        piece.precision(17);
        piece << "{\"alpha\": [" << f[5] << "], \"a\": [" << f[3] << ", " << f[4] << "], \"b\": " << b << "}";
        std::string& side = f[0] == "cv" ? cv : cc;
        side += (side.empty() ? "" : ", ") + piece.str();
    }
    const std::string body = R"({"z_names": ["V"], "p_names": ["P", "T"],
  "residuals": ["(p1 + 3.610/z1^2)*(z1 - 0.0429) - 0.0820574*p2"],
  "z_bounds": [[10, 70]], "p_bounds": [[0.5, 1.1], [250, 320]],
  "pieces": [{"cv": [)" + cv + R"(], "cc": [)" + cc + "]}]}";
    const std::string path = write_file("vdw_corrupted.json", body);
    const Run r = run({"verify", path, "--samples", "200"});
    CHECK(r.code == kExitVerifyFailed);
    CHECK(r.out.find("FAIL sandwich") != std::string::npos);
    CHECK(r.out.find("result: FAIL") != std::string::npos);

}

TEST_CASE("input errors exit with 2")
{
    CHECK(run({}).code == kExitInput);
    CHECK(run({"relax"}).code == kExitInput);
    CHECK(run({"relax", "/nonexistent/problem.json"}).code == kExitInput);
    CHECK(run({"subgrad", example("vdw.json")}).code == kExitInput);
    CHECK(run({"subgrad", example("vdw.json"), "--point", "0.8"}).code == kExitInput);
    CHECK(run({"subgrad", example("vdw.json"), "--point", "0.8,290", "--sense", "up"}).code == kExitInput);
    CHECK(run({"subgrad", example("vdw.json"), "--point", "5,290"}).code == kExitInput);
    CHECK(run({"relax", example("vdw.json"), "--component", "2"}).code == kExitInput);
    CHECK(run({"relax", example("vdw.json"), "--grid", "0"}).code == kExitInput);
    CHECK(run({"relax", example("vdw.json"), "--tol-active", "-1"}).code == kExitInput);
    CHECK(run({"frobnicate"}).code == kExitInput);
    CHECK(run({"--help"}).code == kExitOk);

    const std::string bad = write_file("bad_expr.json", R"({"residuals": ["z1 * (p1 +"],
        "z_bounds": [[0, 1]], "p_bounds": [[0, 1]]})");
    const Run r = run({"relax", bad});
    CHECK(r.code == kExitInput);
    CHECK(r.err.find("position") != std::string::npos);

    const std::string not_json = write_file("not_json.json", "{residuals: 1");
    CHECK(run({"relax", not_json}).code == kExitInput);
    const std::string dims = write_file("dims.json", R"({"residuals": ["z1 - p1"],
        "z_bounds": [[0, 1], [0, 1]], "p_bounds": [[0, 1]]})");
    CHECK(run({"relax", dims}).code == kExitInput);
    const std::string inverted = write_file("inverted.json", R"({"residuals": ["z1 - p1"],
        "z_bounds": [[1, 0]], "p_bounds": [[0, 1]]})");
    CHECK(run({"relax", inverted}).code == kExitInput);
}

TEST_CASE("construction errors exit with 3")
{
    const std::string path = write_file("pole.json", R"({"residuals": ["1/z1 - p1"],
        "z_bounds": [[-1, 1]], "p_bounds": [[0, 1]]})");
    const Run r = run({"relax", path, "--grid", "2"});
    CHECK(r.code == kExitConstruction);
    CHECK_FALSE(r.err.empty());
}

TEST_CASE("infeasible points exit with 4")
{
    // x >= 2 p and x <= p + 0.5 leave no x once p > 0.5
    const std::string path = write_file("narrow.json", R"({"residuals": ["z1 - 1.5*p1"],
        "z_bounds": [[0, 3]], "p_bounds": [[0, 1]],
        "pieces": [{"cv": [{"alpha": [-1], "a": [2], "b": 0}],
                    "cc": [{"alpha": [-1], "a": [1], "b": 0.5}]}]})");
    CHECK(run({"subgrad", path, "--point", "0.25"}).code == kExitOk);
    const Run r = run({"subgrad", path, "--point", "0.75"});
    CHECK(r.code == kExitInfeasible);
    const Run relax = run({"relax", path, "--grid", "5"});
    CHECK(relax.code == kExitOk);
    CHECK(relax.out.find("+inf,-inf") != std::string::npos);
}

TEST_CASE("derivative failures exit with 5")
{
    // x >= 2p - 1 and x <= p touch only at p = 1, where no strictly feasible point exists
    const std::string path = write_file("pinched.json", R"({"residuals": ["z1 - p1"],
        "z_bounds": [[0, 3]], "p_bounds": [[0, 2]],
        "pieces": [{"cv": [{"alpha": [-1], "a": [2], "b": -1}],
                    "cc": [{"alpha": [-1], "a": [1], "b": 0}]}]})");
    const Run r = run({"subgrad", path, "--point", "1", "--regime", "np1"});
    CHECK(r.code == kExitDerivative);
}

TEST_CASE("output file")
{
    const fs::path out = scratch_dir() / "relax.csv";
    fs::remove(out);
    const Run r = run({"relax", example("vdw.json"), "--grid", "2", "--out", out.string()});
    REQUIRE(r.code == kExitOk);
    CHECK(r.out.empty());
    std::ifstream is(out);
    std::stringstream ss;
    ss << is.rdbuf();
    CHECK(ss.str() == run({"relax", example("vdw.json"), "--grid", "2"}).out);
}
