"""File-watching detector bridge for the foveated search engine."""

from .backends import BackendError, StubDetector, TorchvisionDetector, load_backend
from .watcher import BridgeJob, JobError, answer_job, pending_jobs, process_job, read_job, serve

__version__ = "0.1.0"
