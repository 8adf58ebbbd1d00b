"""
asprl — решатель answer set программ, язык действий и обучение с подкреплением
на редуцированном MDP (цикл ASP(RL)) для нестационарного gridworld.
"""
