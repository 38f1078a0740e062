#include <expred/io.hpp>

#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>
#include <vector>

#include <json.hpp>

namespace expred::io
{

std::string format_double(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace
{

std::string complex_pair(const Complex& c)
{
    return "[" + format_double(c.real()) + ", " + format_double(c.imag()) + "]";
}

/// Reads a finite [re, im] pair; path names the location for error messages.
Complex parse_complex(const nlohmann::json& node, const std::string& path)
{
    if (!node.is_array() || node.size() != 2 || !node[0].is_number() || !node[1].is_number())
    {
        throw std::invalid_argument(path + " must be a two-element [re, im] number array");
    }
    const Complex c(node[0].get<double>(), node[1].get<double>());
    if (!std::isfinite(c.real()) || !std::isfinite(c.imag()))
    {
        throw std::invalid_argument(path + " must be finite");
    }
    return c;
}

nlohmann::json parse_text(const std::string& text, const char* what)
{
    nlohmann::json doc = nlohmann::json::parse(text, nullptr, false);
    if (doc.is_discarded())
    {
        throw std::invalid_argument(std::string(what) + ": malformed JSON");
    }
    return doc;
}

}  // namespace

std::string write_model_json(const ExponentialSum& sum)
{
    std::string out = "{\"terms\": [";
    for (std::size_t j = 0; j < sum.order(); ++j)
    {
        if (j > 0)
        {
            out += ", ";
        }
        out += "{\"a\": " + complex_pair(sum.terms()[j].a) +
               ", \"z\": " + complex_pair(sum.terms()[j].z) + "}";
    }
    out += "]}\n";
    return out;
}

ExponentialSum read_model_json(const std::string& text)
{
    const nlohmann::json doc = parse_text(text, "model");
    if (!doc.is_object() || !doc.contains("terms") || !doc["terms"].is_array())
    {
        throw std::invalid_argument("model: expected an object with a \"terms\" array");
    }
    std::vector<Term> terms;
    std::size_t j = 0;
    for (const auto& entry : doc["terms"])
    {
        const std::string where = "model: terms[" + std::to_string(j) + "]";
        if (!entry.is_object() || !entry.contains("a") || !entry.contains("z"))
        {
            throw std::invalid_argument(where + " must be an object with \"a\" and \"z\"");
        }
        terms.push_back(
            {parse_complex(entry["a"], where + ".a"), parse_complex(entry["z"], where + ".z")});
        ++j;
    }
    return ExponentialSum(std::move(terms));
}

std::string write_samples_csv(const SampleSequence& samples)
{
    std::string out = "k,re,im\n";
    for (std::size_t k = 0; k < samples.values.size(); ++k)
    {
        out += std::to_string(k) + "," + format_double(samples.values[k].real()) + "," +
               format_double(samples.values[k].imag()) + "\n";
    }
    return out;
}

SampleSequence read_samples_csv(const std::string& text)
{
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line))
    {
        throw std::invalid_argument("samples: empty input");
    }
    if (!line.empty() && line.back() == '\r')
    {
        line.pop_back();
    }
    if (line != "k,re,im")
    {
        throw std::invalid_argument("samples: first line must be the header \"k,re,im\"");
    }
    SampleSequence out;
    std::size_t row = 0;
    while (std::getline(in, line))
    {
        if (!line.empty() && line.back() == '\r')
        {
            line.pop_back();
        }
        if (line.empty())
        {
            continue;
        }
        unsigned long long k = 0;
        double re = 0.0;
        double im = 0.0;
        char trail = '\0';
        const int got = std::sscanf(line.c_str(), "%llu,%lf,%lf%c", &k, &re, &im, &trail);
        if (got < 3 || (got == 4 && trail != ' '))
        {
            throw std::invalid_argument("samples: malformed row " + std::to_string(row) + ": " +
                                        line);
        }
        if (k != row)
        {
            throw std::invalid_argument("samples: row index " + std::to_string(k) +
                                        " out of order (expected " + std::to_string(row) + ")");
        }
        out.values.emplace_back(re, im);
        ++row;
    }
    validate(out);
    return out;
}

std::string write_spectrum_json(const Eigen::VectorXd& sigmas)
{
    std::string out = "[";
    for (Eigen::Index i = 0; i < sigmas.size(); ++i)
    {
        if (i > 0)
        {
            out += ", ";
        }
        out += format_double(sigmas(i));
    }
    out += "]\n";
    return out;
}

std::string write_reduction_json(const ReductionResult& result)
{
    std::string out = "{\"K\": " + std::to_string(result.K) +
                      ", \"sigma_K\": " + format_double(result.sigma_K) + ", \"roots\": [";
    for (std::size_t j = 0; j < result.disc_roots.size(); ++j)
    {
        if (j > 0)
        {
            out += ", ";
        }
        out += complex_pair(result.disc_roots[j]);
    }
    out += "], \"reduced\": ";
    std::string reduced = write_model_json(result.reduced);
    reduced.pop_back();  // inner document: strip the trailing newline
    out += reduced;
    out += ", \"error_l2\": " + format_double(result.error_l2) +
           ", \"bound_satisfied\": " + (result.bound_satisfied ? "true" : "false") +
           ", \"unchanged\": " + (result.unchanged ? "true" : "false") + "}\n";
    return out;
}

std::string write_verification_json(const VerificationReport& report)
{
    return "{\"sigma_K\": " + format_double(report.sigma_K) +
           ", \"gamma_g_norm_estimate\": " + format_double(report.gamma_g_norm_estimate) +
           ", \"residual_rank\": " + std::to_string(report.residual_rank) +
           ", \"error_bound_holds\": " + (report.error_bound_holds ? "true" : "false") +
           ", \"truncation_size\": " + std::to_string(report.truncation_size) + "}\n";
}

std::string write_recovery_diagnostics_json(const RecoveryDiagnostics& diagnostics)
{
    std::string out = "{\"estimated_order\": " + std::to_string(diagnostics.estimated_order) +
                      ", \"singular_values\": [";
    for (Eigen::Index i = 0; i < diagnostics.order_singular_values.size(); ++i)
    {
        if (i > 0)
        {
            out += ", ";
        }
        out += format_double(diagnostics.order_singular_values(i));
    }
    out += "], \"fit_residual\": " + format_double(diagnostics.fit_residual) +
           ", \"vandermonde_condition\": " + format_double(diagnostics.vandermonde_condition) +
           "}\n";
    return out;
}

}  // namespace expred::io
