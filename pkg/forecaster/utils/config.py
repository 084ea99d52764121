from dotenv import load_dotenv
import os

load_dotenv()


class Config:
    PROFILE = os.getenv("FORECASTER_PROFILE", "desk")
    LOG_LEVEL = os.getenv("FORECASTER_LOG_LEVEL", "INFO")
    THREADS = int(os.getenv("FORECASTER_THREADS", "1"))
    SLOW_TESTS = os.getenv("FORECASTER_SLOW_TESTS", "false").lower() == "true"
