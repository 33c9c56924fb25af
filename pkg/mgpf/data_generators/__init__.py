from mgpf.data_generators.benchmark_cases_generator import BenchmarkCasesGenerator, CaseWhoFailed
