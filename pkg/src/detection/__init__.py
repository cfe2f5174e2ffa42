# Detection stages: normalize -> neighbors -> scoring -> threshold
