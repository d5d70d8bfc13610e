"""Worker-pool helpers for chunk- and patch-level parallelism."""
