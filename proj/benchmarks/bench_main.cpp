#include <benchmark/benchmark.h>

// libbenchmark_main.a from the distro is LTO bytecode; link our own main.
BENCHMARK_MAIN();
