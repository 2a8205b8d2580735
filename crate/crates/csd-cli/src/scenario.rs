// placeholder until the scenario schema lands
