"""Simulation of optical downlinks from a low-Earth-orbit satellite to a network of ground stations.

The pipeline runs orbit propagation and pass prediction, then cloud and turbulence ingestion,
then the link budget, and finally network-level availability, throughput and buffer analysis.
"""
from .analysis import (
    AvailabilityReport, BufferState, ThroughputSummary, availability_series, buffer_simulate,
    pearson_cloud_correlation, throughput,
)
from .linkbudget import LinkEnvironment, LinkResult, NoiseSpec, TerminalSpec, link_budget
from .orbit import GeodeticSite, TwoLineElements, parse_tle, propagate, read_tle_file
from .passes import Pass, find_passes
from .scenario import Scenario, integrate, load_scenario, run_sweep
from .weather import WeatherSeries, cflos, load_grid_series, station_cloud_series, synth_weather

__version__ = "0.1.0"

__all__ = [
    "AvailabilityReport", "BufferState", "GeodeticSite", "LinkEnvironment", "LinkResult", "NoiseSpec",
    "Pass", "Scenario", "TerminalSpec", "ThroughputSummary", "TwoLineElements", "WeatherSeries",
    "availability_series", "buffer_simulate", "cflos", "find_passes", "integrate", "link_budget",
    "load_grid_series", "load_scenario", "parse_tle", "pearson_cloud_correlation", "propagate",
    "read_tle_file", "run_sweep", "station_cloud_series", "synth_weather", "throughput",
]
