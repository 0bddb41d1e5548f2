from abc import ABC, abstractmethod

# columns every trial row carries, in output order
TRIAL_COLUMNS = ["mode", "cell", "algorithm", "trial", "D", "K", "d", "N_k", "theta", "sigma", "B", "T", "q",
                 "error_pct"]


class ResultBackend(ABC):
    """Somewhere to put experiment results.

    Writes happen from a single collector after the parallel work is gathered.
    """

    @abstractmethod
    def is_ready(self):
        pass

    @abstractmethod
    def save_run(self, run_id, mode, config):
        pass

    @abstractmethod
    def save_trial_results(self, run_id, rows):
        pass

    @abstractmethod
    def save_summary(self, run_id, rows):
        pass

    @abstractmethod
    def save_affinity(self, run_id, name, matrix):
        pass

    @abstractmethod
    def get_trial_results(self, run_id):
        pass
