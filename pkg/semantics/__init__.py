# semantics package: partitions, atom clouds, information transfer
