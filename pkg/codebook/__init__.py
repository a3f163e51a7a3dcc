# codebook package: linear OT maps between atoms
