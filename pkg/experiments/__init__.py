"""Monte Carlo studies: null calibration, power, unique rejections, market returns."""
