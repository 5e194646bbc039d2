#include <gtest/gtest.h>

#include <filesystem>
#include <random>
#include <sstream>

#include "test_support.hpp"

using namespace regnewton;
using namespace regnewton::testing;

namespace {

SparseDataset parse(const std::string& text, const LibsvmOptions& opts = {}) {
    std::istringstream in(text);
    return parse_libsvm(in, opts);
}

std::filesystem::path temp_path(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("regnewton_test_" + name);
}

} // namespace

TEST(Libsvm, SingleLine) {
    const auto ds = parse("1 2:0.5 4:1.0\n");
    EXPECT_EQ(ds.n, 1u);
    EXPECT_EQ(ds.d, 4u);
    ASSERT_EQ(ds.rows[0].size(), 2u);
    EXPECT_EQ(ds.rows[0][0], (SparseDataset::Entry{2, 0.5}));
    EXPECT_EQ(ds.rows[0][1], (SparseDataset::Entry{4, 1.0}));
    EXPECT_EQ(ds.labels[0], 1.0);
}

TEST(Libsvm, MinusOneMapsToZero) { EXPECT_EQ(parse("-1 1:3\n").labels[0], 0.0); }

TEST(Libsvm, NonIncreasingIndicesRejectedWithLine) {
    try {
        parse("# header\n1 1:1\n1 4:1 2:5\n");
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 3u);
    }
    EXPECT_THROW(parse("1 2:1 2:3\n"), ParseError);
}

TEST(Libsvm, MalformedTokens) {
    EXPECT_THROW(parse("x 1:2\n"), ParseError);
    EXPECT_THROW(parse("1 1-2\n"), ParseError);
    EXPECT_THROW(parse("1 a:2\n"), ParseError);
    EXPECT_THROW(parse("1 0:2\n"), ParseError);
    EXPECT_THROW(parse("1 1:abc\n"), ParseError);
}

TEST(Libsvm, CommentsBlankLinesAndEmptyRows) {
    const auto ds = parse("\n# comment only\n+1 3:2 # trailing\n\n0\n");
    EXPECT_EQ(ds.n, 2u);
    EXPECT_EQ(ds.d, 3u);
    EXPECT_TRUE(ds.rows[1].empty());
    EXPECT_EQ(ds.labels[1], 0.0);
}

TEST(Libsvm, LabelRules) {
    EXPECT_THROW(parse("2 1:1\n"), NonBinaryLabel);
    LibsvmOptions remap;
    remap.remap_two_class = true;
    const auto ds = parse("1 1:1\n2 1:2\n2 2:1\n", remap);
    EXPECT_EQ(ds.labels, (std::vector<double>{0.0, 1.0, 1.0}));
    EXPECT_THROW(parse("1 1:1\n2 1:1\n3 1:1\n", remap), NonBinaryLabel);
}

TEST(Libsvm, DimensionOverride) {
    LibsvmOptions opts;
    opts.dim = 10;
    EXPECT_EQ(parse("1 2:1\n", opts).d, 10u);
    opts.dim = 1;
    EXPECT_THROW(parse("1 2:1\n", opts), ParseError);
}

TEST(Libsvm, RoundTripRandomDatasets) {
    std::mt19937_64 rng(77);
    std::uniform_int_distribution<int> nnz(0, 6);
    std::normal_distribution<double> normal;
    for (int trial = 0; trial < 25; ++trial) {
        SparseDataset ds;
        ds.n = 1 + trial % 7;
        for (std::size_t i = 0; i < ds.n; ++i) {
            std::vector<SparseDataset::Entry> row;
            std::size_t idx = 0;
            for (int j = nnz(rng); j > 0; --j) {
                idx += 1 + static_cast<std::size_t>(std::abs(normal(rng)) * 3);
                row.push_back({idx, normal(rng) * 1e3});
            }
            ds.d = std::max(ds.d, idx);
            ds.rows.push_back(std::move(row));
            ds.labels.push_back(normal(rng) > 0 ? 1.0 : 0.0);
        }
        std::ostringstream out;
        serialize_libsvm(ds, out);
        LibsvmOptions opts;
        opts.dim = ds.d;
        EXPECT_EQ(parse(out.str(), opts), ds);
    }
}

TEST(Libsvm, ToDense) {
    const auto [a, b] = to_dense(parse("1 1:2 3:4\n-1 2:5\n"));
    Matrix want(2, 3);
    want << 2, 0, 4, 0, 5, 0;
    EXPECT_EQ(a, want);
    EXPECT_EQ(b[0], 1.0);
    EXPECT_EQ(b[1], 0.0);
}

TEST(Libsvm, MissingFile) { EXPECT_THROW(load_libsvm("/nonexistent/regnewton.txt"), IoError); }

TEST(Generators, Deterministic) {
    EXPECT_EQ(gen_logsumexp_instance(2, 2, 7), gen_logsumexp_instance(2, 2, 7));
    EXPECT_NE(gen_logsumexp_instance(2, 2, 7).first, gen_logsumexp_instance(2, 2, 8).first);
    const auto [a, b] = gen_logistic_instance(50, 3, 1);
    EXPECT_EQ(a, gen_logistic_instance(50, 3, 1).first);
    for (Eigen::Index i = 0; i < b.size(); ++i)
        EXPECT_TRUE(b[i] == 0.0 || b[i] == 1.0);
    EXPECT_THROW(gen_logsumexp_instance(0, 2, 1), DimensionMismatch);
}

TEST(TraceCsv, EmptyTraceIsHeaderOnly) {
    std::ostringstream out;
    write_trace_csv(std::vector<TraceRecord>{}, out);
    EXPECT_EQ(out.str(), std::string(kTraceHeader) + "\n");
}

TEST(TraceCsv, RoundTripIsExact) {
    const auto r = run_adan(make_cubic_norm_worstcase(4), Vector::Zero(4), SolverConfig{});
    std::stringstream buf;
    write_trace_csv(r.trace, buf);
    const auto back = read_trace_csv(buf);
    ASSERT_EQ(back.size(), r.trace.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
        EXPECT_EQ(back[i].k, r.trace[i].k);
        EXPECT_EQ(back[i].f, r.trace[i].f);
        EXPECT_EQ(back[i].grad_norm, r.trace[i].grad_norm);
        EXPECT_EQ(back[i].lambda, r.trace[i].lambda);
        EXPECT_EQ(back[i].step_norm, r.trace[i].step_norm);
        EXPECT_EQ(back[i].h_k, r.trace[i].h_k);
        EXPECT_EQ(back[i].inner_count, r.trace[i].inner_count);
        EXPECT_EQ(back[i].newton_steps_cum, r.trace[i].newton_steps_cum);
    }
}

TEST(TraceCsv, LMRoundTripThroughFile) {
    const auto r = run_lm(make_componentwise_quadratic(Vector::Ones(2)), Vector::Constant(2, 2.0), LMConfig{});
    const auto path = temp_path("lm.csv").string();
    write_trace_csv(r.trace, path);
    const auto back = read_lm_trace_csv(path);
    ASSERT_EQ(back.size(), r.trace.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
        EXPECT_EQ(back[i].residual_norm, r.trace[i].residual_norm);
        EXPECT_EQ(back[i].c_k, r.trace[i].c_k);
    }
    std::filesystem::remove(path);
}

TEST(TraceCsv, SchemaErrors) {
    std::istringstream wrong_header("k,f\n1,2\n");
    EXPECT_THROW(read_trace_csv(wrong_header), SchemaError);
    std::istringstream short_row(std::string(kTraceHeader) + "\n0,1,2\n");
    EXPECT_THROW(read_trace_csv(short_row), SchemaError);
    std::istringstream bad_cell(std::string(kLMTraceHeader) + "\n0,x,1,1,1,1\n");
    EXPECT_THROW(read_lm_trace_csv(bad_cell), SchemaError);
    EXPECT_THROW(read_trace_csv(std::string("/nonexistent/trace.csv")), IoError);
    EXPECT_THROW(write_trace_csv(std::vector<TraceRecord>{}, std::string("/nonexistent/dir/t.csv")), IoError);
}
