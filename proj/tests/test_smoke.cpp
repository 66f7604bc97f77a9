#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "emgsnn/cli.hpp"
#include "emgsnn/pipeline.hpp"

TEST_CASE("headers compile and defaults hold together") {
    emgsnn::PipelineConfig cfg;
    CHECK(cfg.t_fix % cfg.bin == 0);
    CHECK(emgsnn::feature_dim(cfg, emgsnn::Ablation::none) == 4 * 100);
    CHECK(emgsnn::feature_dim(cfg, emgsnn::Ablation::no_solvers) == 4 * 10 * 2000);
}
