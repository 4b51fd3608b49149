"""Constants for the ntest toolkit."""

# Default settings
DEFAULT_SEED = 20190601
DEFAULT_CALIBRATION_REPS = 1_000_000
DEFAULT_POWER_REPS = 200_000
DEFAULT_TEST_CALIBRATION_REPS = 20_000
DEFAULT_CHUNK_SIZE = 10_000
DEFAULT_JOBS = 1
DEFAULT_QUANTILE_GRID_SIZE = 10_001
DEFAULT_LEVELS = (0.01, 0.025, 0.05)
DEFAULT_SAMPLE_SIZES = (50, 100, 250)

# Output settings
OUTPUT_DIR = "output"
CALIBRATION_DIR = "calibration"
TIMESTAMP_FORMAT = "%Y%m%d_%H%M%S"

# File patterns
CALIBRATION_FILE_PATTERN = "{statistic}_n{n}_r{reps}_s{seed}_{config}.ncal"
STUDY_FILE_PATTERN = "{study}_{timestamp}{extension}"
FILE_EXTENSION_JSON = ".json"
FILE_EXTENSION_CSV = ".csv"

# Calibration file format
CALIBRATION_MAGIC = b"NTESTCAL\n"
CALIBRATION_FORMAT_VERSION = 1
MIN_CALIBRATION_REPS = 10_000

# Logging
LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"

# Exit codes
EXIT_OK = 0
EXIT_INTERNAL_ERROR = 1
EXIT_USAGE_ERROR = 2

# Error messages
ERROR_NO_DATA = "no data"
ERROR_MISSING_CALIBRATION = "run `ntest calibrate --n {n}` first"

# Success messages
MSG_STARTING = "🚀 Starting {study}..."
MSG_COMPLETED = "✅ {study} completed!"
MSG_SAVED_TO = "💾 Results saved to: {file}"
MSG_CALIBRATION_LOADED = "📂 Loaded calibration {file}"
MSG_CALIBRATING = "🎯 Calibrating n={n} with {reps} replications..."

# Progress messages
MSG_PROCESSING_BATCH = "📦 {label} batch {batch}/{total} ({size} replications)"
MSG_PROGRESS = "{label} progress: {current}/{total} replications, eta {eta}"
MSG_CHUNK_FAILED = "❌ Chunk {index} failed: {error}"
MSG_SKIPPED_SERIES = "⚠️ Skipping {name} at n={n}: {reason}"
