# harness package: artifacts, episodes, sweeps, rasters
