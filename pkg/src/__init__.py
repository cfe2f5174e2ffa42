# stray: k-NN max-gap anomaly detection
