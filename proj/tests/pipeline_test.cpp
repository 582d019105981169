// End-to-end smoke test of the CLI binary: synth -> preprocess -> train ->
// eval -> explain, plus exit-code contracts. Takes the binary path as argv[1].

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

namespace fs = std::filesystem;

namespace {

int failures = 0;

void check(bool ok, const std::string& what) {
  if (ok) {
    std::cout << "[ok] " << what << "\n";
  } else {
    std::cout << "[FAILED] " << what << "\n";
    ++failures;
  }
}

int run(const std::string& command) {
  const int status = std::system(command.c_str());
  return status == -1 ? -1 : WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: kgrec_pipeline_test <path-to-kgrec-binary>\n";
    return 2;
  }
  const std::string cli = argv[1];
  const fs::path work = fs::temp_directory_path() / "kgrec_pipeline_test";
  fs::remove_all(work);
  fs::create_directories(work);
  const std::string raw = (work / "raw").string();
  const std::string data = (work / "data").string();
  const std::string out = (work / "run").string();
  const std::string quiet = " 2>/dev/null";

  check(run(cli + " synth --users 15 --items 30 --attrs 4 --noise 0.2 --seed 3 --out " + raw +
            quiet) == 0,
        "synth exits 0");
  check(fs::exists(fs::path(raw) / "interactions.tsv"), "synth wrote interactions.tsv");

  check(run(cli + " preprocess --interactions " + raw + "/interactions.tsv --triples " + raw +
            "/triples.tsv --out " + data + " --seed 42" + quiet) == 0,
        "preprocess exits 0");
  check(fs::exists(fs::path(data) / "manifest.txt"), "preprocess wrote a manifest");

  {
    std::ofstream cfg(work / "run.cfg");
    cfg << "interactions=" << raw << "/interactions.tsv\n"
        << "triples=" << raw << "/triples.tsv\n"
        << "out=" << out << "\n"
        << "embed_dim=8\nepochs=4\nseed=42\nmin_count=1\n";
  }
  check(run(cli + " train --config " + (work / "run.cfg").string() + quiet) == 0,
        "train exits 0");
  check(fs::exists(fs::path(out) / "checkpoint.bin"), "train wrote a checkpoint");
  check(fs::exists(fs::path(out) / "losses.csv"), "train wrote losses.csv");
  {
    const std::string losses = slurp(fs::path(out) / "losses.csv");
    check(losses.rfind("epoch,train_loss,val_loss\n", 0) == 0, "losses.csv header");
  }

  check(run(cli + " eval --checkpoint " + out + "/checkpoint.bin --data " + out +
            " >/dev/null" + quiet) == 0,
        "eval exits 0");
  check(fs::exists(fs::path(out) / "metrics.csv"), "eval wrote metrics.csv");

  // pick a (user, item) pair straight from the split
  std::string user_key, item_key;
  {
    std::ifstream train_file(fs::path(out) / "train.tsv");
    std::string line;
    std::getline(train_file, line);
    const auto tab1 = line.find('\t');
    const auto tab2 = line.find('\t', tab1 + 1);
    user_key = line.substr(0, tab1);
    item_key = line.substr(tab1 + 1, tab2 - tab1 - 1);
  }
  const std::string explain_out = (work / "explain.txt").string();
  check(run(cli + " explain --checkpoint " + out + "/checkpoint.bin --data " + out + " --user " +
            user_key + " --item " + item_key + " > " + explain_out + quiet) == 0,
        "explain exits 0");
  check(slurp(explain_out).find("-[interacted]-> " + item_key) != std::string::npos,
        "explain shows the direct interaction path");

  // sweep over two rates, format checked
  {
    std::ofstream cfg(work / "sweep.cfg");
    cfg << "interactions=" << raw << "/interactions.tsv\n"
        << "triples=" << raw << "/triples.tsv\n"
        << "out=" << (work / "sweep_out").string() << "\n"
        << "embed_dim=8\nepochs=2\nseed=42\nmin_count=1\n";
  }
  check(run(cli + " sweep --config " + (work / "sweep.cfg").string() +
            " --lrs 0.002,0.001 >/dev/null" + quiet) == 0,
        "sweep exits 0");
  {
    const std::string csv = slurp(work / "sweep_out" / "sweep.csv");
    check(csv.rfind("lr,precision@10,recall@10,ndcg@10,map\n", 0) == 0, "sweep.csv header");
    check(std::count(csv.begin(), csv.end(), '\n') == 3, "sweep.csv has one row per rate");
  }

  // exit-code contract
  check(run(cli + " eval --checkpoint " + out + "/missing.bin --data " + out + quiet) == 2,
        "missing checkpoint exits 2");
  check(run(cli + " eval --data " + out + quiet) == 1, "missing required flag exits 1");
  check(run(cli + " frobnicate" + quiet) == 1, "unknown subcommand exits 1");
  check(run(cli + " explain --checkpoint " + out + "/checkpoint.bin --data " + out +
            " --user nope --item " + item_key + quiet) == 2,
        "unknown user key exits 2");
  {
    std::ofstream cfg(work / "bad.cfg");
    cfg << "learning_rate=fast\n";
    check(run(cli + " train --config " + (work / "bad.cfg").string() + quiet) == 2,
          "malformed config exits 2");
  }

  if (failures == 0) {
    std::cout << "pipeline test passed\n";
    return 0;
  }
  std::cout << failures << " pipeline check(s) failed\n";
  return 1;
}
