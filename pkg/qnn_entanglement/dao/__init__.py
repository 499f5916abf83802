FLOAT_FORMAT = "%.17g"
