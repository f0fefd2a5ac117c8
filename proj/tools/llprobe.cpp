#include <sys/wait.h>
#include <unistd.h>

#include <CLI11.hpp>
#include <ext/stdio_filebuf.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include "llprobe/exact.hpp"
#include "llprobe/mia.hpp"
#include "llprobe/precision.hpp"
#include "llprobe/wire.hpp"

using namespace llprobe;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitFailure = 1;
constexpr std::uint64_t kDefaultSeed = 2024;

std::string read_input(const std::string& path) {
    if (path == "-") {
        std::ostringstream buffer;
        buffer << std::cin.rdbuf();
        return buffer.str();
    }
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot read " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

std::string trim(std::string s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

Normalization parse_normalization(const std::string& name) {
    return name == "total" ? Normalization::total : Normalization::per_point;
}

void emit(const wire::Json& doc, const std::string& out_path) {
    const auto text = wire::dump(doc);
    if (out_path.empty()) {
        std::cout << text << '\n';
        return;
    }
    std::ofstream out(out_path);
    if (!out) throw std::invalid_argument("cannot write " + out_path);
    out << text << '\n';
}

// Runs `llprobe serve` as a child process and talks to it over two pipes.
class ServeProcess {
public:
    ServeProcess(const std::string& hidden_path, wire::OracleMode mode, int phi) {
        int to_child[2];
        int from_child[2];
        if (pipe(to_child) != 0 || pipe(from_child) != 0) throw std::runtime_error("cannot create pipes");
        pid_ = fork();
        if (pid_ < 0) throw std::runtime_error("cannot fork the oracle");
        if (pid_ == 0) {
            dup2(to_child[0], STDIN_FILENO);
            dup2(from_child[1], STDOUT_FILENO);
            close(to_child[0]);
            close(to_child[1]);
            close(from_child[0]);
            close(from_child[1]);
            const std::string mode_name = mode == wire::OracleMode::exact ? "exact" : "decimal";
            const std::string phi_text = std::to_string(phi);
            execl("/proc/self/exe", "llprobe", "serve", "--hidden", hidden_path.c_str(), "--mode", mode_name.c_str(),
                  "--phi", phi_text.c_str(), static_cast<char*>(nullptr));
            _exit(127);
        }
        close(to_child[0]);
        close(from_child[1]);
        out_buf_ = std::make_unique<__gnu_cxx::stdio_filebuf<char>>(to_child[1], std::ios::out);
        in_buf_ = std::make_unique<__gnu_cxx::stdio_filebuf<char>>(from_child[0], std::ios::in);
        to_server_ = std::make_unique<std::ostream>(out_buf_.get());
        from_server_ = std::make_unique<std::istream>(in_buf_.get());
    }

    ~ServeProcess() {
        to_server_.reset();
        out_buf_.reset();
        from_server_.reset();
        in_buf_.reset();
        int status = 0;
        waitpid(pid_, &status, 0);
    }

    std::istream& from_server() { return *from_server_; }
    std::ostream& to_server() { return *to_server_; }

private:
    pid_t pid_ = -1;
    std::unique_ptr<__gnu_cxx::stdio_filebuf<char>> out_buf_;
    std::unique_ptr<__gnu_cxx::stdio_filebuf<char>> in_buf_;
    std::unique_ptr<std::ostream> to_server_;
    std::unique_ptr<std::istream> from_server_;
};

struct TempFile {
    std::string path;

    explicit TempFile(const std::string& contents) {
        std::string pattern = "/tmp/llprobe-hidden-XXXXXX";
        const int fd = mkstemp(pattern.data());
        if (fd < 0) throw std::runtime_error("cannot create a temporary file");
        path = pattern;
        const auto written = write(fd, contents.data(), contents.size());
        close(fd);
        if (written != static_cast<ssize_t>(contents.size())) throw std::runtime_error("cannot write " + path);
    }
    ~TempFile() { std::remove(path.c_str()); }
};

int run_build(const std::string& kind, std::size_t n, unsigned k, const std::string& out) {
    if (kind == "twin") {
        emit(wire::to_json(wire::vector_document(kind, build_twin_prime_vector(n))), out);
    } else if (kind == "binary") {
        emit(wire::to_json(wire::vector_document(kind, build_binary_vector(n).entries)), out);
    } else {
        emit(wire::to_json(wire::matrix_document(kind, build_multiclass_matrix(n, k))), out);
    }
    return 0;
}

int run_score(const std::string& vector_path, const std::string& labels, std::optional<int> phi,
              const std::string& normalization, const std::string& out) {
    const auto doc = wire::parse_vector_document(wire::parse_json(read_input(vector_path)));
    if (doc.is_matrix()) {
        if (phi) throw std::invalid_argument("multi-class scores are exact only");
        const auto classes = wire::parse_class_labeling(labels, *doc.class_count);
        if (classes.size() != doc.n) throw std::invalid_argument("labeling length differs from the vector");
        const auto score = exact_score_multiclass(doc.matrix(), classes);
        emit(wire::to_json(wire::ScoreDocument{wire::ExactScoreDocument{score.rational(), score.n}}), out);
        return 0;
    }
    const auto bits = wire::parse_labeling(labels);
    if (bits.size() != doc.n) throw std::invalid_argument("labeling length differs from the vector");
    const auto x = doc.vector();
    if (phi) {
        wire::DecimalScoreDocument scored{logloss_decimal(x, bits, *phi, parse_normalization(normalization)),
                                          auc(x, bits, *phi), *phi};
        emit(wire::to_json(wire::ScoreDocument{std::move(scored)}), out);
    } else {
        const auto score = exact_score(x, bits);
        emit(wire::to_json(wire::ScoreDocument{wire::ExactScoreDocument{score.rational(), score.n}}), out);
    }
    return 0;
}

int run_decode(const std::string& score_path, const std::string& kind, std::optional<std::size_t> n,
               std::optional<unsigned> k, const std::string& normalization) {
    const auto doc = wire::parse_score_document(wire::parse_json(read_input(score_path)));
    if (const auto* decimal = std::get_if<wire::DecimalScoreDocument>(&doc)) {
        if (kind != "binary") throw std::invalid_argument("rounded scores decode only for the binary kind");
        if (!n) throw std::invalid_argument("--n is required for rounded scores");
        std::cout << decode_binary_from_decimal(decimal->ll, *n, parse_normalization(normalization)).to_string()
                  << '\n';
        return 0;
    }
    const auto& exact = std::get<wire::ExactScoreDocument>(doc);
    const ExactScore score(exact.escore, exact.n);
    if (kind == "twin") {
        std::cout << decode_twin_prime(score, n).to_string() << '\n';
    } else if (kind == "binary") {
        std::cout << decode_binary(score, n).to_string() << '\n';
    } else {
        if (!n || !k) throw std::invalid_argument("--n and --K are required for the multiclass kind");
        std::cout << decode_multiclass(score, *n, *k).to_string() << '\n';
    }
    return 0;
}

int run_serve(const std::string& hidden_path, const std::string& mode, int phi, const std::string& normalization) {
    const auto hidden = wire::parse_labeling(trim(read_input(hidden_path)));
    wire::OracleServer server(hidden, mode == "exact" ? wire::OracleMode::exact : wire::OracleMode::decimal,
                              mode == "exact" ? 0 : phi, parse_normalization(normalization));
    server.serve(std::cin, std::cout);
    return 0;
}

AttackReport attack(const CandidateSet& candidates, const std::string& mode, int phi, ExactOracle& exact,
                    DecimalOracle& decimal) {
    if (mode == "twin") return one_query_attack(candidates, exact, AttackMode::exact_twin);
    if (mode == "binary") return one_query_attack(candidates, exact, AttackMode::exact_binary);
    return fixed_precision_attack(candidates, decimal, phi);
}

int run_attack_demo(std::size_t n, const std::string& mode, int phi, std::uint64_t seed,
                    const std::string& transport, const std::string& out) {
    if (n == 0) throw std::invalid_argument("--n must be at least 1");
    const int digits = mode == "fixed" ? phi : 0;

    // Curator side: the hidden membership never leaves this scope except
    // through the oracle.
    std::mt19937_64 rng(seed);
    std::vector<std::uint8_t> bits(n);
    for (auto& bit : bits) bit = static_cast<std::uint8_t>(rng() & 1U);
    const MembershipVector hidden(std::move(bits));
    CuratorOracle curator(hidden, digits);

    const auto candidates = CandidateSet::numbered(n);
    auto report = [&] {
        if (transport != "pipe") return attack(candidates, mode, phi, curator, curator);
        const TempFile hidden_file(hidden.to_string() + "\n");
        ServeProcess server(hidden_file.path, mode == "fixed" ? wire::OracleMode::decimal : wire::OracleMode::exact,
                            digits);
        wire::RemoteOracle remote(server.from_server(), server.to_server(), digits);
        auto result = attack(candidates, mode, phi, remote, remote);
        remote.quit();
        return result;
    }();
    report.accuracy = curator.evaluate(report);

    const auto doc = wire::to_json(report, n);
    std::cout << "mode: " << to_string(report.mode) << '\n'
              << "candidates: " << n << '\n'
              << "transport: " << transport << '\n'
              << "seed: " << seed << '\n'
              << "queries_used: " << report.queries_used << '\n'
              << "accuracy: " << doc["accuracy"].dump() << '\n';
    emit(doc, out);
    return 0;
}

int run_plan(std::size_t n, std::optional<int> phi, const std::string& delta, const std::string& out) {
    int digits = 0;
    if (phi) {
        digits = *phi;
    } else {
        digits = min_digits_for_separation(Rational::parse_decimal(delta));
        if (digits == 0) digits = 1;
    }
    auto doc = wire::plan_json(plan_batches(n, digits));
    if (!delta.empty()) doc["delta"] = delta;
    emit(doc, out);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Label inference from Log-Loss scores"};
    app.require_subcommand(1);

    std::string out;

    auto* build = app.add_subcommand("build", "Write an adversarial prediction vector or matrix");
    std::string build_kind;
    std::size_t build_n = 0;
    unsigned build_k = 0;
    build->add_option("kind", build_kind, "twin, binary or multiclass")
        ->required()
        ->check(CLI::IsMember({"twin", "binary", "multiclass"}));
    build->add_option("--n", build_n, "Number of points")->required();
    build->add_option("--K", build_k, "Number of classes (multiclass)");
    build->add_option("--out", out, "Output file (default stdout)");

    auto* score = app.add_subcommand("score", "Score a vector document against labels");
    std::string score_vector;
    std::string score_labels;
    std::optional<int> score_phi;
    std::string normalization = "per-point";
    score->add_option("--vector", score_vector, "Vector document ('-' for stdin)")->required();
    score->add_option("--labels", score_labels, "Labeling, e.g. 101 or 2,3")->required();
    score->add_option("--phi", score_phi, "Round to this many significant digits")->check(CLI::Range(1, 1000));
    score->add_option("--normalization", normalization, "per-point or total")
        ->check(CLI::IsMember({"per-point", "total"}));
    score->add_option("--out", out, "Output file (default stdout)");

    auto* decode = app.add_subcommand("decode", "Recover a labeling from a score document");
    std::string decode_score;
    std::string decode_kind;
    std::optional<std::size_t> decode_n;
    std::optional<unsigned> decode_k;
    decode->add_option("--score", decode_score, "Score document ('-' for stdin)")->required();
    decode->add_option("--kind", decode_kind, "twin, binary or multiclass")
        ->required()
        ->check(CLI::IsMember({"twin", "binary", "multiclass"}));
    decode->add_option("--n", decode_n, "Number of points (inferred for twin and binary)");
    decode->add_option("--K", decode_k, "Number of classes (multiclass)");
    decode->add_option("--normalization", normalization, "per-point or total (rounded scores)")
        ->check(CLI::IsMember({"per-point", "total"}));

    auto* serve = app.add_subcommand("serve", "Answer SCORE requests on stdin against hidden labels");
    std::string serve_hidden;
    std::string serve_mode = "exact";
    int serve_phi = 2;
    serve->add_option("--hidden", serve_hidden, "File holding the hidden bitstring")->required();
    serve->add_option("--mode", serve_mode, "exact or decimal")->check(CLI::IsMember({"exact", "decimal"}));
    serve->add_option("--phi", serve_phi, "Significant digits in decimal mode")->check(CLI::Range(0, 1000));
    serve->add_option("--normalization", normalization, "per-point or total")
        ->check(CLI::IsMember({"per-point", "total"}));

    auto* demo = app.add_subcommand("attack-demo", "Run a membership inference attack against a simulated curator");
    std::size_t demo_n = 0;
    std::string demo_mode = "twin";
    int demo_phi = 2;
    std::uint64_t demo_seed = kDefaultSeed;
    std::string demo_transport = "inproc";
    demo->add_option("--n", demo_n, "Number of candidates")->required();
    demo->add_option("--mode", demo_mode, "twin, binary or fixed")->check(CLI::IsMember({"twin", "binary", "fixed"}));
    demo->add_option("--phi", demo_phi, "Significant digits (fixed mode)")->check(CLI::Range(1, 1000));
    demo->add_option("--seed", demo_seed, "Seed for the hidden membership");
    demo->add_option("--transport", demo_transport, "inproc or pipe")->check(CLI::IsMember({"inproc", "pipe"}));
    demo->add_option("--out", out, "Write the report document here instead of stdout");

    auto* plan = app.add_subcommand("plan", "Batch schedule for fixed-precision inference");
    std::size_t plan_n = 0;
    std::optional<int> plan_phi;
    std::string plan_delta;
    plan->add_option("--n", plan_n, "Number of points")->required();
    auto* phi_option = plan->add_option("--phi", plan_phi, "Significant digits")->check(CLI::Range(1, 1000));
    auto* delta_option = plan->add_option("--delta", plan_delta, "Smallest score separation, e.g. 0.002");
    phi_option->excludes(delta_option);
    plan->add_option("--out", out, "Output file (default stdout)");

    try {
        app.parse(argc, argv);
        if (*plan && !*phi_option && !*delta_option) {
            throw CLI::ValidationError("plan", "one of --phi or --delta is required");
        }
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (*build) return run_build(build_kind, build_n, build_k, out);
        if (*score) return run_score(score_vector, score_labels, score_phi, normalization, out);
        if (*decode) return run_decode(decode_score, decode_kind, decode_n, decode_k, normalization);
        if (*serve) return run_serve(serve_hidden, serve_mode, serve_phi, normalization);
        if (*demo) return run_attack_demo(demo_n, demo_mode, demo_phi, demo_seed, demo_transport, out);
        if (*plan) return run_plan(plan_n, plan_phi, plan_delta, out);
    } catch (const DecodeError& e) {
        std::cerr << "decode error: " << e.what() << '\n';
        return kExitFailure;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitFailure;
    }
    return kExitUsage;
}
