// CLI behavior: exit codes, the JSON report, expectation checking and the
// dump flags.
#include <doctest.h>

#include <json.hpp>

#include "helpers.hpp"

namespace {

std::string cli(const std::string& args)
{
  return test::caplet_bin() + " " + args;
}

std::string with_solver(const std::string& file, const std::string& extra = "")
{
  return cli("verify " + file + " --solver " + test::capsmt_bin() + " --out /tmp/caplet-cli-out "
             + extra);
}

}  // namespace

TEST_CASE("a missing input file exits with the usage code")
{
  std::string out;
  int code = test::run_command(with_solver("missing.cap"), &out);
  CHECK(code == 3);
  CHECK(out.find("no such file") != std::string::npos);
}

TEST_CASE("expectations: met expectations exit 0, a refuted VERIFY exits 1")
{
  std::string out;
  int code =
    test::run_command(with_solver(test::corpus("clients/cell_two_calls.cap"), "--expect"), &out);
  CHECK(code == 0);
  CHECK(out.find("all expectations met") != std::string::npos);

  // Without --expect the refuted assertion drives the exit code.
  code = test::run_command(with_solver(test::corpus("clients/cell_two_calls.cap")), &out);
  CHECK(code == 1);

  // A FAIL comment on an obligation that verifies is a mismatch.
  std::string bad =
    "fn ok(c: &Cell<i32>) {\n"
    "    c.set(1);\n"
    "    assert!(c.get() == 1); //~ FAIL\n"
    "}\n";
  std::string path = test::write_temp("badexpect.cap", bad);
  code = test::run_command(
    with_solver(path, "--lib " + test::corpus("lib") + " --expect"), &out);
  CHECK(code == 1);
  CHECK(out.find("expectation mismatch") != std::string::npos);
}

TEST_CASE("an expectation comment on a line without an obligation is a config error")
{
  std::string bad =
    "fn quiet(c: &Cell<i32>) {\n"
    "    c.set(1); //~ VERIFY\n"
    "}\n";
  std::string path = test::write_temp("strayexpect.cap", bad);
  std::string out;
  int code = test::run_command(
    with_solver(path, "--lib " + test::corpus("lib") + " --expect"), &out);
  CHECK(code == 3);
  CHECK(out.find("no obligation") != std::string::npos);
}

TEST_CASE("the JSON report is schema-versioned and stable-ordered")
{
  std::string out;
  int code = test::run_command(
    with_solver(test::corpus("clients/arc_client.cap"), "--json"), &out);
  CHECK(code == 1);  // the else branch refutes three assertions
  nlohmann::json report = nlohmann::json::parse(out);
  CHECK(report["schema"] == 1);
  REQUIRE(report["results"].is_array());
  REQUIRE(report["results"].size() == 6);
  int last_line = 0;
  for (const auto& item : report["results"]) {
    CHECK(item.contains("file"));
    CHECK(item.contains("line"));
    CHECK(item.contains("col"));
    CHECK(item.contains("kind"));
    CHECK(item.contains("verdict"));
    CHECK(item.contains("millis"));
    CHECK(last_line <= item["line"].get<int>());
    last_line = item["line"].get<int>();
  }
  CHECK(report["results"][0]["verdict"] == "verified");
}

TEST_CASE("--dump-lattice prints the capability graph")
{
  std::string out;
  int code = test::run_command(cli("--dump-lattice"), &out);
  CHECK(code == 0);
  CHECK(out.find("digraph capabilities") != std::string::npos);
  CHECK(out.find("writeRef -> readRef") != std::string::npos);
}

TEST_CASE("--dump-roots prints the TSV table before the report")
{
  std::string out;
  int code = test::run_command(
    with_solver(test::corpus("clients/cell_client.cap"), "--dump-roots --expect"), &out);
  CHECK(code == 0);
  CHECK(out.find("function\tpoint\troot_id\tplace\tkind\ttype") != std::string::npos);
}

TEST_CASE("--emit-smt writes one script per obligation and skips solving")
{
  std::string dir = "/tmp/caplet-cli-emit";
  test::run_command("rm -rf " + dir);
  std::string out;
  int code = test::run_command(
    cli("verify " + test::corpus("clients/refcell_client.cap") + " --emit-smt " + dir), &out);
  CHECK(code == 0);
  namespace fs = std::filesystem;
  int scripts = 0;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.path().extension() == ".smt2") ++scripts;
  CHECK(scripts == 3);
}

TEST_CASE("emitted scripts solved externally match in-process verdicts")
{
  std::string dir = "/tmp/caplet-cli-emit2";
  test::run_command("rm -rf " + dir);
  test::run_command(
    cli("verify " + test::corpus("clients/cell_two_calls.cap") + " --emit-smt " + dir));
  std::string first, second;
  test::run_command(test::capsmt_bin() + " " + dir + "/cell_two_calls/0.smt2", &first);
  test::run_command(test::capsmt_bin() + " " + dir + "/cell_two_calls/1.smt2", &second);
  CHECK(first.find("sat") == 0);    // refuted assertion: counterexample exists
  CHECK(second.find("unsat") == 0); // pointer stability proved
}

TEST_CASE("the corpus manifest lists every client exactly once")
{
  std::vector<caplet::ManifestEntry> manifest =
    caplet::load_manifest(test::corpus("manifest.tsv"));
  REQUIRE(!manifest.empty());
  std::set<std::string> listed;
  for (const caplet::ManifestEntry& e : manifest) {
    CHECK(listed.insert(e.file).second);
    CHECK(e.expected_exit == 0);
  }
  CHECK(listed.count("clients/cell_client.cap"));
  namespace fs = std::filesystem;
  int on_disk = 0;
  for (const auto& entry : fs::directory_iterator(test::corpus("clients"))) {
    if (entry.path().extension() != ".cap") continue;
    ++on_disk;
    CHECK(listed.count("clients/" + entry.path().filename().string()));
  }
  CHECK(on_disk == static_cast<int>(listed.size()));

  // The empty manifest gates CI with an error rather than a silent no-op.
  std::string empty = test::write_temp("empty_manifest.tsv", "file\texpected_exit\n");
  CHECK_THROWS_AS(caplet::load_manifest(empty), caplet::CapletError);
}

TEST_CASE("every manifest entry meets its expected exit code")
{
  std::vector<caplet::ManifestEntry> manifest =
    caplet::load_manifest(test::corpus("manifest.tsv"));
  for (const caplet::ManifestEntry& e : manifest) {
    std::string out;
    int code = test::run_command(with_solver(test::corpus(e.file), "--expect"), &out);
    CAPTURE(e.file);
    CHECK(code == e.expected_exit);
  }
}
