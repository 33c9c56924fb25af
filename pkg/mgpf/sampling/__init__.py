from mgpf.sampling.sampler import MGPFSampler, SampleRequest, SampleResult, cfg_epsilon, write_sample_outputs
