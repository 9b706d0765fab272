#pragma once

// The jcisis command-line front end. run_cli() returns the process exit code:
// 0 success, 1 I/O failure, 2 format/parse/usage error, 3 degenerate data.

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "jcisis/jcisis.hpp"

namespace jcisis::cli {

enum ExitCode : int { kOk = 0, kIoFailure = 1, kBadInput = 2, kDegenerate = 3 };

inline int exit_code_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::IoError: return kIoFailure;
        case ErrorCode::DegenerateSample:
        case ErrorCode::ZeroVarianceColumn:
        case ErrorCode::InvalidValue: return kDegenerate;
        default: return kBadInput;
    }
}

/// %.17g
inline std::string format_score(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// Shortest text that reads back to the same double.
inline std::string format_short(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

/// Column label for output: "ch<c>:<id>", the bare id, or the 1-based index if the id is empty.
inline std::string column_label(const std::vector<SnpMeta>& meta, std::size_t j) {
    if (j < meta.size() && !meta[j].id.empty()) return snp_label(meta[j]);
    return std::to_string(j + 1);
}

namespace detail {

/// Output target: "-" is the caller's stream, anything else a truncated file.
class Sink {
public:
    Sink(const std::string& path, std::ostream& stdout_stream) : path_(path) {
        if (path == "-") {
            stream_ = &stdout_stream;
            return;
        }
        file_ = std::make_unique<std::ofstream>(path, std::ios::binary | std::ios::trunc);
        if (!*file_) throw Error(ErrorCode::IoError, "cannot open '" + path + "' for writing");
        stream_ = file_.get();
    }

    std::ostream& stream() { return *stream_; }

    void close() {
        stream_->flush();
        if (file_) file_->close();
        if (!*stream_ || (file_ && file_->fail())) throw Error(ErrorCode::IoError, "failed writing '" + path_ + "'");
    }

private:
    std::string path_;
    std::unique_ptr<std::ofstream> file_;
    std::ostream* stream_ = nullptr;
};

inline std::ifstream open_input(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path + "': " + std::strerror(errno));
    return in;
}

inline MissingPolicy missing_policy(const std::string& name) {
    return name == "impute" ? MissingPolicy::Impute : MissingPolicy::Reject;
}

inline PairRange parse_pair_range(const std::string& text) {
    const std::size_t colon = text.find(':');
    auto number = [&](std::string_view s) {
        std::uint64_t v = 0;
        const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size()) {
            throw Error(ErrorCode::InvalidConfig, "--pair-range expects START:END, got '" + text + "'");
        }
        return v;
    };
    if (colon == std::string::npos) number("");
    const std::string_view view(text);
    return {number(view.substr(0, colon)), number(view.substr(colon + 1))};
}

inline std::size_t default_workers() {
    const char* env = std::getenv("JCI_WORKERS");
    if (!env || !*env) return 1;
    std::size_t v = 0;
    const std::string_view s(env);
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || v < 1) {
        throw Error(ErrorCode::InvalidConfig, "JCI_WORKERS must be a positive integer, got '" + std::string(s) + "'");
    }
    return v;
}

/// Predictors, response and labels for a scan, whatever the input format.
struct LoadedData {
    NumericMatrix x;
    std::vector<double> y;
    std::vector<SnpMeta> meta;
};

inline LoadedData load_scan_input(const std::string& input, const std::optional<std::string>& pheno,
                                  const std::string& response, MissingPolicy missing) {
    std::ifstream in = open_input(input);
    LoadedData data;
    if (looks_packed(in)) {
        if (!pheno) throw Error(ErrorCode::InvalidConfig, "packed input needs a phenotype file (--pheno)");
        GenotypeMatrix g = parse_packed(in, missing);
        data.meta = g.meta();
        data.x = g.to_numeric();
    } else {
        CsvOptions options;
        options.missing = missing;
        if (pheno) options.response_column.reset();
        else options.response_column = response;
        CsvData csv = parse_csv(in, options);
        data.x = std::move(csv.x);
        data.y = std::move(csv.y);
        data.meta = std::move(csv.meta);
    }
    if (pheno) {
        std::ifstream pin = open_input(*pheno);
        data.y = read_phenotype(pin, response);
    }
    if (data.y.size() != data.x.rows()) {
        throw Error(ErrorCode::DimensionMismatch, "phenotype has " + std::to_string(data.y.size()) +
                                                      " values but the data has " + std::to_string(data.x.rows()) +
                                                      " samples");
    }
    return data;
}

inline void write_pairs(std::ostream& out, const std::vector<PairStatistic>& rows, const std::vector<SnpMeta>& meta) {
    out << "snp1,snp2,r_hat\n";
    for (const PairStatistic& s : rows) {
        out << csv_escape(column_label(meta, s.j1)) << ',' << csv_escape(column_label(meta, s.j2)) << ','
            << format_score(s.r_hat) << '\n';
    }
}

inline std::string describe_degenerate(const ZeroVarianceColumn& e, const std::vector<SnpMeta>& meta) {
    if (e.is_response()) return "response has zero variance";
    return "column '" + column_label(meta, e.index()) + "' (index " + std::to_string(e.index() + 1) +
           ") has zero variance";
}

// ---------------------------------------------------------------- scan

struct ScanArgs {
    std::string input;
    std::optional<std::string> pheno;
    std::string response = "y";
    std::optional<std::size_t> top_k;
    std::optional<double> threshold;
    std::optional<std::size_t> workers;
    std::size_t block_size = 256;
    std::optional<std::string> pair_range;
    std::string out = "-";
    std::optional<std::string> dump_all;
    std::string missing = "reject";
};

inline int cmd_scan(const ScanArgs& a, std::ostream& out, std::ostream& err) {
    ScanConfig config;
    config.top_k = a.top_k;
    config.threshold = a.threshold;
    if (!config.top_k && !config.threshold) config.top_k = 10;
    config.block_size = a.block_size;
    config.worker_count = a.workers ? *a.workers : default_workers();
    if (a.pair_range) config.pair_range = parse_pair_range(*a.pair_range);
    {
        // Flag checks before any file is read; the range bound is checked once p is known.
        ScanConfig flags = config;
        flags.pair_range.reset();
        flags.resolve(1);
        if (config.pair_range) ScanConfig::resolve_range(config.pair_range, config.pair_range->end);
    }

    const LoadedData data = load_scan_input(a.input, a.pheno, a.response, missing_policy(a.missing));
    Workspace ws = [&] {
        try {
            return precompute(data.x, data.y);
        } catch (const ZeroVarianceColumn& e) {
            err << "jcisis: degenerate data: " << describe_degenerate(e, data.meta) << '\n';
            throw;
        }
    }();

    const ScanResult result = scan(ws, config);
    Sink sink(a.out, out);
    if (config.top_k) write_pairs(sink.stream(), result.top_pairs, data.meta);
    if (config.threshold) {
        if (config.top_k) sink.stream() << '\n';
        write_pairs(sink.stream(), result.selected, data.meta);
    }
    sink.close();

    if (a.dump_all) {
        Sink dump(*a.dump_all, out);
        std::ostream& d = dump.stream();
        d << "snp1,snp2,chr1,chr2,r_hat\n";
        auto chrom = [&](std::size_t j) { return j < data.meta.size() ? unsigned{data.meta[j].chromosome} : 0u; };
        for_each_pair_ordered(ws, config.pair_range, config.worker_count, [&](const PairStatistic& s) {
            d << csv_escape(column_label(data.meta, s.j1)) << ',' << csv_escape(column_label(data.meta, s.j2)) << ','
              << chrom(s.j1) << ',' << chrom(s.j2) << ',' << format_score(s.r_hat) << '\n';
        });
        dump.close();
    }
    return kOk;
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
    int study = 0;
    std::size_t reps = 100;
    std::uint64_t seed = 1;
    std::optional<std::size_t> n;
    std::optional<std::size_t> p;
    std::optional<std::size_t> workers;
    std::size_t block_size = 256;
    std::string out_summary = "-";
    std::optional<std::string> out_replicates;
};

inline int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
    sim::SimStudySpec spec = sim::make_study_spec(a.study, a.seed, a.reps);
    if (a.n) spec.n = *a.n;
    if (a.p) spec.p = *a.p;
    spec.validate();
    sim::RunOptions options;
    options.worker_count = a.workers ? *a.workers : default_workers();
    options.block_size = a.block_size;
    if (options.block_size < 1) throw Error(ErrorCode::InvalidConfig, "block size must be >= 1");

    const std::vector<sim::ReplicateReport> reports = sim::run_replications(spec, options);
    const sim::RankSummary summary = sim::summarize(reports);

    if (a.out_replicates) {
        Sink sink(*a.out_replicates, out);
        std::ostream& s = sink.stream();
        s << "replicate,pair,rank,in_top5\n";
        for (const auto& r : reports) {
            for (std::size_t t = 0; t < r.true_pairs.size(); ++t) {
                s << r.replicate + 1 << ',' << sim::pair_label(r.true_pairs[t]) << ',' << r.ranks[t] << ','
                  << (r.in_top5[t] ? 1 : 0) << '\n';
            }
        }
        sink.close();
    }

    Sink sink(a.out_summary, out);
    std::ostream& s = sink.stream();
    s << "pair,mean_rank,median_rank,top5_pct\n";
    for (const auto& row : summary.per_pair) {
        s << sim::pair_label(row.pair) << ',' << format_short(row.mean_rank) << ',' << row.median_rank << ','
          << format_short(row.top5_pct) << '\n';
    }
    s << "ALL,,," << format_short(summary.all_pairs_top5_pct) << '\n';
    sink.close();
    return kOk;
}

// ---------------------------------------------------------------- convert

struct ConvertArgs {
    std::string input;
    std::string output;
    std::optional<std::string> from;
    std::string to;
    std::optional<std::string> response;
    std::optional<std::string> pheno;
    std::optional<std::string> pheno_out;
    std::string missing = "reject";
};

inline int cmd_convert(const ConvertArgs& a, std::ostream& out) {
    if (a.pheno_out && !a.response) throw Error(ErrorCode::InvalidConfig, "--pheno-out needs --response");
    if (a.pheno && a.response) throw Error(ErrorCode::InvalidConfig, "use either --pheno or --response");
    const MissingPolicy missing = missing_policy(a.missing);

    std::ifstream in = open_input(a.input);
    const bool packed_input = looks_packed(in);
    if (a.from && (*a.from == "packed") != packed_input) {
        throw Error(ErrorCode::FormatError, "'" + a.input + "' is not a " + *a.from + " file");
    }

    std::optional<GenotypeMatrix> genotypes;
    NumericMatrix x;
    std::vector<std::string> names;
    std::vector<SnpMeta> meta;
    std::vector<double> y;
    std::string y_name = a.response.value_or("y");
    if (packed_input) {
        genotypes.emplace(parse_packed(in, missing));
        meta = genotypes->meta();
        for (std::size_t j = 0; j < meta.size(); ++j) names.push_back(column_label(meta, j));
        x = genotypes->to_numeric();
    } else {
        CsvOptions options;
        options.response_column = a.response;
        options.missing = missing;
        CsvData csv = parse_csv(in, options);
        x = std::move(csv.x);
        y = std::move(csv.y);
        names = std::move(csv.names);
        meta = std::move(csv.meta);
    }
    if (a.pheno) {
        std::ifstream pin = open_input(*a.pheno);
        y = read_phenotype(pin, std::nullopt);
        if (y.size() != x.rows()) throw Error(ErrorCode::DimensionMismatch, "phenotype length differs from n");
    }

    if (a.to == "packed") {
        if (!genotypes) genotypes.emplace(GenotypeMatrix::from_numeric(x, meta));
        std::ofstream file(a.output, std::ios::binary | std::ios::trunc);
        if (!file) throw Error(ErrorCode::IoError, "cannot open '" + a.output + "' for writing");
        write_packed(*genotypes, file);
        file.close();
        if (!file) throw Error(ErrorCode::IoError, "failed writing '" + a.output + "'");
    } else {
        Sink sink(a.output, out);
        if (!y.empty() && !a.pheno_out) {
            write_csv(sink.stream(), x, names, std::make_pair(y_name, std::span<const double>(y)));
        } else {
            write_csv(sink.stream(), x, names);
        }
        sink.close();
    }

    if (a.pheno_out) {
        Sink sink(*a.pheno_out, out);
        sink.stream() << csv_escape(y_name) << '\n';
        for (double v : y) sink.stream() << format_real(v) << '\n';
        sink.close();
    }
    return kOk;
}

// ---------------------------------------------------------------- report

struct ReportArgs {
    std::string scores;
    std::size_t bins = 10;
    std::string out_histogram = "-";
    std::optional<std::string> out_groups;
};

struct DumpRow {
    unsigned chr1 = 0;
    unsigned chr2 = 0;
    double r_hat = 0.0;
};

/// Reads every row of a --dump-all file, calling `visit` for each.
template <class Visit>
std::uint64_t read_dump(const std::string& path, Visit&& visit) {
    std::ifstream in = open_input(path);
    CsvReader reader(in);
    std::vector<std::string> fields;
    if (!reader.next(fields) ||
        fields != std::vector<std::string>{"snp1", "snp2", "chr1", "chr2", "r_hat"}) {
        throw Error(ErrorCode::FormatError, "'" + path + "' is not a score dump (expected header "
                                            "snp1,snp2,chr1,chr2,r_hat)");
    }
    auto bad = [&](const std::string& why) {
        return Error(ErrorCode::FormatError,
                     "score dump record " + std::to_string(reader.record_number()) + ": " + why);
    };
    auto chromosome = [&](const std::string& s) {
        unsigned v = 0;
        const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size() || v > 255) {
            throw bad("chromosome '" + s + "' is not an integer in 0..255");
        }
        return v;
    };
    std::uint64_t rows = 0;
    while (reader.next(fields)) {
        if (fields.size() == 1 && fields[0].empty()) continue;
        if (fields.size() != 5) throw bad("expected 5 fields, got " + std::to_string(fields.size()));
        DumpRow row;
        row.chr1 = chromosome(fields[2]);
        row.chr2 = chromosome(fields[3]);
        const std::string& r = fields[4];
        const auto [ptr, ec] = std::from_chars(r.data(), r.data() + r.size(), row.r_hat);
        if (r.empty() || ec != std::errc{} || ptr != r.data() + r.size() || !std::isfinite(row.r_hat) ||
            row.r_hat < 0.0) {
            throw bad("r_hat '" + r + "' is not a finite non-negative number");
        }
        visit(row);
        ++rows;
    }
    return rows;
}

inline int cmd_report(const ReportArgs& a, std::ostream& out) {
    if (a.bins < 1) throw Error(ErrorCode::InvalidConfig, "--bins must be >= 1");

    struct Group {
        std::uint64_t pairs = 0;
        double sum = 0.0;
        double max = 0.0;
    };
    std::map<std::pair<unsigned, unsigned>, Group> groups;
    double max_score = 0.0;
    const std::uint64_t total = read_dump(a.scores, [&](const DumpRow& row) {
        Group& g = groups[{std::min(row.chr1, row.chr2), std::max(row.chr1, row.chr2)}];
        ++g.pairs;
        g.sum += row.r_hat;
        g.max = std::max(g.max, row.r_hat);
        max_score = std::max(max_score, row.r_hat);
    });
    if (total == 0) throw Error(ErrorCode::FormatError, "score dump has no rows");

    const double width = max_score / static_cast<double>(a.bins);
    std::vector<std::uint64_t> counts(a.bins, 0);
    read_dump(a.scores, [&](const DumpRow& row) {
        std::size_t bin = 0;
        if (max_score > 0.0) {
            bin = static_cast<std::size_t>(row.r_hat / max_score * static_cast<double>(a.bins));
            bin = std::min(bin, a.bins - 1);
        }
        ++counts[bin];
    });

    Sink hist(a.out_histogram, out);
    hist.stream() << "bin,lower,upper,count\n";
    for (std::size_t b = 0; b < a.bins; ++b) {
        const double upper = b + 1 == a.bins ? max_score : width * static_cast<double>(b + 1);
        hist.stream() << b + 1 << ',' << format_score(width * static_cast<double>(b)) << ','
                      << format_score(upper) << ',' << counts[b] << '\n';
    }
    hist.close();

    if (a.out_groups) {
        Sink g(*a.out_groups, out);
        g.stream() << "chr1,chr2,pairs,mean_r_hat,max_r_hat\n";
        for (const auto& [key, grp] : groups) {
            g.stream() << key.first << ',' << key.second << ',' << grp.pairs << ','
                       << format_score(grp.sum / static_cast<double>(grp.pairs)) << ',' << format_score(grp.max)
                       << '\n';
        }
        g.close();
    }
    return kOk;
}

}  // namespace detail

/// Runs one invocation. `args` excludes the program name.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Screens predictor pairs for interactions with a normalized three-way joint cumulant."};
    app.name("jcisis");
    app.require_subcommand(1);

    detail::ScanArgs scan_args;
    auto* scan_cmd = app.add_subcommand("scan", "Score every predictor pair of a CSV or packed file");
    scan_cmd->add_option("input", scan_args.input, "CSV or packed genotype file")->required();
    scan_cmd->add_option("--pheno", scan_args.pheno, "Phenotype CSV (required for packed input)");
    scan_cmd->add_option("--response", scan_args.response, "Response column name")->capture_default_str();
    scan_cmd->add_option("--top-k", scan_args.top_k, "Keep the k best pairs (default 10 without --threshold)");
    scan_cmd->add_option("--threshold", scan_args.threshold, "Keep pairs with r_hat above this value");
    scan_cmd->add_option("--workers", scan_args.workers, "Worker threads (default $JCI_WORKERS or 1)");
    scan_cmd->add_option("--block-size", scan_args.block_size, "Tile edge in columns")->capture_default_str();
    scan_cmd->add_option("--pair-range", scan_args.pair_range, "Canonical pair indices START:END");
    scan_cmd->add_option("--out", scan_args.out, "Output CSV, - for stdout")->capture_default_str();
    scan_cmd->add_option("--dump-all", scan_args.dump_all, "Also write every pair score to this file");
    scan_cmd->add_option("--missing", scan_args.missing, "Missing values: reject or impute")
        ->check(CLI::IsMember({"reject", "impute"}))
        ->capture_default_str();

    detail::SimulateArgs sim_args;
    auto* sim_cmd = app.add_subcommand("simulate", "Run a simulation study and summarize true-pair ranks");
    sim_cmd->add_option("--study", sim_args.study, "Study design 1-5")->required()->check(CLI::Range(1, 5));
    sim_cmd->add_option("--reps", sim_args.reps, "Replications")->capture_default_str()->check(CLI::PositiveNumber);
    sim_cmd->add_option("--seed", sim_args.seed, "Study seed")->capture_default_str();
    sim_cmd->add_option("--n", sim_args.n, "Samples per replicate");
    sim_cmd->add_option("--p", sim_args.p, "Predictors per replicate");
    sim_cmd->add_option("--workers", sim_args.workers, "Worker threads (default $JCI_WORKERS or 1)");
    sim_cmd->add_option("--block-size", sim_args.block_size, "Tile edge in columns")->capture_default_str();
    sim_cmd->add_option("--out-summary", sim_args.out_summary, "Summary CSV, - for stdout")->capture_default_str();
    sim_cmd->add_option("--out-replicates", sim_args.out_replicates, "Per-replicate rank CSV");

    detail::ConvertArgs conv_args;
    auto* conv_cmd = app.add_subcommand("convert", "Convert between CSV and packed genotype files");
    conv_cmd->add_option("input", conv_args.input, "Input file")->required();
    conv_cmd->add_option("output", conv_args.output, "Output file, - for stdout when writing CSV")->required();
    conv_cmd->add_option("--from", conv_args.from, "Input format (detected when omitted)")
        ->check(CLI::IsMember({"csv", "packed"}));
    conv_cmd->add_option("--to", conv_args.to, "Output format")->required()->check(CLI::IsMember({"csv", "packed"}));
    conv_cmd->add_option("--response", conv_args.response, "Response column of a CSV input");
    conv_cmd->add_option("--pheno", conv_args.pheno, "Phenotype CSV to append when writing CSV");
    conv_cmd->add_option("--pheno-out", conv_args.pheno_out, "Write the response column to this file");
    conv_cmd->add_option("--missing", conv_args.missing, "Missing values: reject or impute")
        ->check(CLI::IsMember({"reject", "impute"}))
        ->capture_default_str();

    detail::ReportArgs rep_args;
    auto* rep_cmd = app.add_subcommand("report", "Histogram and chromosome-pair summary of a score dump");
    rep_cmd->add_option("--scores", rep_args.scores, "File written by scan --dump-all")->required();
    rep_cmd->add_option("--bins", rep_args.bins, "Histogram bins")->capture_default_str();
    rep_cmd->add_option("--out-histogram", rep_args.out_histogram, "Histogram CSV, - for stdout")
        ->capture_default_str();
    rep_cmd->add_option("--out-groups", rep_args.out_groups, "Per chromosome pair summary CSV");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(std::move(reversed));
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "jcisis: " << e.what() << '\n';
        return kBadInput;
    }

    try {
        if (*scan_cmd) return detail::cmd_scan(scan_args, out, err);
        if (*sim_cmd) return detail::cmd_simulate(sim_args, out);
        if (*conv_cmd) return detail::cmd_convert(conv_args, out);
        return detail::cmd_report(rep_args, out);
    } catch (const ZeroVarianceColumn& e) {
        if (!*scan_cmd) err << "jcisis: degenerate data: " << e.what() << '\n';
        return kDegenerate;
    } catch (const Error& e) {
        err << "jcisis: " << e.what() << '\n';
        return exit_code_for(e.code());
    } catch (const std::bad_alloc&) {
        err << "jcisis: out of memory\n";
        return kIoFailure;
    }
}

}  // namespace jcisis::cli
