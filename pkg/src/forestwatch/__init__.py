"""Container workload fingerprinting and intrusion detection from syscall windows."""

__version__ = "0.1.0"
