#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <expred/con_eigen.hpp>
#include <expred/exponential_sum.hpp>
#include <expred/fit.hpp>
#include <expred/hankel_oracle.hpp>
#include <expred/io.hpp>
#include <expred/prony.hpp>
#include <expred/reduction.hpp>

namespace
{

struct Options
{
    std::string input;
    std::string output;
    std::optional<double> eps;
    std::optional<long long> K;
    std::string norm = "l2";
    long long truncation = 0;  // 0 = subcommand default (verify 400, eval 100)
    double rank_tol = 1e-12;
    long long max_order = 0;
};

std::string read_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
    {
        throw std::invalid_argument("cannot read input file: " + path);
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const std::string& path, const std::string& content)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
    {
        throw std::invalid_argument("cannot write output file: " + path);
    }
    out << content;
}

/// Primary artifact goes to --output, or stdout when no path was given.
void emit_primary(const Options& opts, const std::string& content)
{
    if (opts.output.empty())
    {
        std::fputs(content.c_str(), stdout);
    }
    else
    {
        write_file(opts.output, content);
    }
}

/// Auxiliary artifacts live next to the primary one (suffix appended); they
/// are skipped when the primary goes to stdout.
void emit_auxiliary(const Options& opts, const std::string& suffix, const std::string& content)
{
    if (!opts.output.empty())
    {
        write_file(opts.output + suffix, content);
    }
}

expred::PronyOptions prony_options(const Options& opts)
{
    expred::PronyOptions p;
    p.rank_tol = opts.rank_tol;
    if (opts.max_order < 0)
    {
        throw std::invalid_argument("--max-order must be nonnegative");
    }
    p.max_order = static_cast<std::size_t>(opts.max_order);
    return p;
}

/// A model document starts with '{'; anything else is treated as sample CSV.
bool looks_like_json(const std::string& text)
{
    for (const char c : text)
    {
        if (c == ' ' || c == '\t' || c == '\n' || c == '\r')
        {
            continue;
        }
        return c == '{';
    }
    return false;
}

expred::ExponentialSum load_model_or_recover(const Options& opts)
{
    const std::string text = read_file(opts.input);
    if (looks_like_json(text))
    {
        return expred::io::read_model_json(text);
    }
    return expred::recover(expred::io::read_samples_csv(text), prony_options(opts));
}

void run_recover(const Options& opts)
{
    const expred::SampleSequence samples = expred::io::read_samples_csv(read_file(opts.input));
    const expred::RecoveryResult result =
        expred::recover_with_diagnostics(samples, prony_options(opts));
    emit_primary(opts, expred::io::write_model_json(result.model));
    const std::string diagnostics =
        expred::io::write_recovery_diagnostics_json(result.diagnostics);
    if (opts.output.empty())
    {
        std::fputs(diagnostics.c_str(), stdout);
    }
    else
    {
        emit_auxiliary(opts, ".diagnostics.json", diagnostics);
    }
}

void run_spectrum(const Options& opts)
{
    const expred::ExponentialSum model = expred::io::read_model_json(read_file(opts.input));
    const expred::ConEigenSystem sys = expred::con_eigen(model);
    emit_primary(opts, expred::io::write_spectrum_json(sys.sigmas));
}

/// Per-index error table spanning K = 0..N-1, with non-simple indices marked
/// rather than computed.
std::string error_table(const expred::ExponentialSum& model, const expred::ConEigenSystem& sys,
                        const expred::detail::ConEigenDD& dd)
{
    std::string csv = "K,sigma_K,error_l2,error_l1_truncated\n";
    for (std::size_t K = 0; K < model.order(); ++K)
    {
        const double sigma = sys.sigmas(static_cast<Eigen::Index>(K));
        csv += std::to_string(K) + "," + expred::io::format_double(sigma) + ",";
        if (!sys.simplicity_flags[K])
        {
            csv += "non-simple,non-simple\n";
            continue;
        }
        const expred::ReductionResult row = expred::detail::reduce_with_system(model, K, dd);
        const double l1 = expred::l1_norm_truncated(expred::difference(model, row.reduced),
                                                    std::max(1e-15, 1e-8 * sigma));
        csv += expred::io::format_double(row.error_l2) + "," + expred::io::format_double(l1) +
               "\n";
    }
    return csv;
}

void run_reduce(const Options& opts)
{
    if (opts.eps.has_value() == opts.K.has_value())
    {
        throw std::invalid_argument("reduce requires exactly one of --eps and --K");
    }
    const expred::ExponentialSum model = load_model_or_recover(opts);
    expred::ReductionResult result;
    if (opts.eps)
    {
        result = expred::reduce_to_eps(model, *opts.eps);
    }
    else
    {
        if (*opts.K < 0)
        {
            throw std::invalid_argument("--K must be nonnegative");
        }
        result = expred::reduce_to_K(model, static_cast<std::size_t>(*opts.K));
    }

    if (opts.norm == "l1" && result.K > 0 && !result.unchanged)
    {
        // Re-optimize the reduced weights in the truncated sequence l1 norm.
        // The reported error_l2/bound fields describe the re-weighted model;
        // the sigma_K guarantee is specific to the l2-optimal weights, so the
        // bound may come out unsatisfied here.
        std::vector<expred::Complex> nodes;
        for (const auto& t : result.reduced.terms())
        {
            nodes.push_back(t.z);
        }
        const double tol = std::max(1e-12, 1e-6 * result.sigma_K);
        const expred::FitReport fit = expred::fit_l1(model, nodes, tol);
        Eigen::VectorXcd w(static_cast<Eigen::Index>(fit.weights.size()));
        for (std::size_t j = 0; j < fit.weights.size(); ++j)
        {
            w(static_cast<Eigen::Index>(j)) = fit.weights[j];
        }
        result.reduced = expred::detail::fitted_model(nodes, w);
        result.error_l2 = expred::l2_norm(expred::difference(model, result.reduced));
        result.bound_satisfied = result.error_l2 <= result.sigma_K * (1.0 + 1e-6);
    }

    emit_primary(opts, expred::io::write_reduction_json(result));
    if (!opts.output.empty())
    {
        const expred::ConEigenSystem sys = expred::con_eigen(model);
        emit_auxiliary(opts, ".spectrum.json", expred::io::write_spectrum_json(sys.sigmas));
        emit_auxiliary(opts, ".table.csv",
                       error_table(model, sys, expred::detail::con_eigen_dd(model)));
    }
}

void run_eval(const Options& opts)
{
    const expred::ExponentialSum model = expred::io::read_model_json(read_file(opts.input));
    const long long M = opts.truncation > 0 ? opts.truncation : 100;
    emit_primary(opts, expred::io::write_samples_csv(
                           expred::sample(model, static_cast<std::size_t>(M))));
}

void run_norms(const Options& opts)
{
    const expred::ExponentialSum model = expred::io::read_model_json(read_file(opts.input));
    const double tol = opts.eps.value_or(1e-10);
    const double l1 = expred::l1_norm_truncated(model, tol);
    const double l2 = expred::l2_norm(model);
    emit_primary(opts, "{\"l1_truncated\": " + expred::io::format_double(l1) +
                           ", \"l2\": " + expred::io::format_double(l2) + "}\n");
}

void run_verify(const Options& opts)
{
    const expred::ExponentialSum model = expred::io::read_model_json(read_file(opts.input));
    if (!opts.K)
    {
        throw std::invalid_argument("verify requires --K");
    }
    if (*opts.K < 0)
    {
        throw std::invalid_argument("--K must be nonnegative");
    }
    const long long m = opts.truncation > 0 ? opts.truncation : 400;
    const expred::VerificationReport report = expred::verify_aak(
        model, static_cast<std::size_t>(*opts.K), static_cast<std::size_t>(m));
    emit_primary(opts, expred::io::write_verification_json(report));
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Exponential-sum recovery, spectral analysis, and near-optimal reduction"};
    app.require_subcommand(1);
    Options opts;

    const auto add_io = [&opts](CLI::App* cmd, bool output_required = false) {
        cmd->add_option("--input", opts.input, "input file")->required();
        auto* out = cmd->add_option("--output", opts.output,
                                    "output file (stdout when omitted; auxiliary artifacts "
                                    "are written only with --output)");
        if (output_required)
        {
            out->required();
        }
    };

    CLI::App* recover = app.add_subcommand(
        "recover", "recover a model from sample CSV (writes model JSON + diagnostics)");
    add_io(recover);
    recover->add_option("--rank-tol", opts.rank_tol, "relative singular-value threshold");
    recover->add_option("--max-order", opts.max_order, "order cap (0 = from sample count)");

    CLI::App* spectrum =
        app.add_subcommand("spectrum", "print the singular values of a model's Hankel matrix");
    add_io(spectrum);

    CLI::App* reduce = app.add_subcommand(
        "reduce", "reduce a model (JSON) or samples (CSV) to fewer terms; writes the "
                  "reduction JSON plus .spectrum.json and .table.csv next to --output");
    add_io(reduce);
    reduce->add_option("--eps", opts.eps, "target error bound (picks the smallest valid K)");
    reduce->add_option("--K", opts.K, "number of terms to keep");
    reduce->add_option("--norm", opts.norm, "weight-fit norm for the reduced model")
        ->check(CLI::IsMember({"l1", "l2"}));
    reduce->add_option("--rank-tol", opts.rank_tol,
                       "recovery threshold when the input is sample CSV");
    reduce->add_option("--max-order", opts.max_order,
                       "recovery order cap when the input is sample CSV");

    CLI::App* eval =
        app.add_subcommand("eval", "sample a model as CSV for k = 0..M (M from --truncation, "
                                   "default 100)");
    add_io(eval);
    eval->add_option("--truncation", opts.truncation, "last sample index M");

    CLI::App* norms = app.add_subcommand(
        "norms", "print the truncated l1 norm and the l2 norm of a model");
    add_io(norms);
    norms->add_option("--eps", opts.eps, "l1 truncation tolerance (default 1e-10)");

    CLI::App* verify = app.add_subcommand(
        "verify", "verify one reduction step against truncated-operator evidence");
    add_io(verify);
    verify->add_option("--K", opts.K, "reduction index")->required();
    verify->add_option("--truncation", opts.truncation, "block size m (default 400)");

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError& e)
    {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;  // help/version exit 0; bad flags are validation errors
    }

    try
    {
        if (recover->parsed())
        {
            run_recover(opts);
        }
        else if (spectrum->parsed())
        {
            run_spectrum(opts);
        }
        else if (reduce->parsed())
        {
            run_reduce(opts);
        }
        else if (eval->parsed())
        {
            run_eval(opts);
        }
        else if (norms->parsed())
        {
            run_norms(opts);
        }
        else if (verify->parsed())
        {
            run_verify(opts);
        }
    }
    catch (const std::invalid_argument& e)
    {
        std::fprintf(stderr, "E_INVALID: %s\n", e.what());
        return 1;
    }
    catch (const std::exception& e)
    {
        std::fprintf(stderr, "%s\n", e.what());
        return 2;
    }
    return 0;
}
