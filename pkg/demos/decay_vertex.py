"""Where and when a particle decays, given where its products end up.

The vertex is the stationary point of the total action over the decay event.
Moving one product's final position moves the vertex, so the same initial
data are compatible with many decay events.
"""
from pathmeasure.decay import DecaySpec, solve_vertex_closed_form, solve_vertex_numeric


def main():
    base = dict(m1=10.0, m2=3.0, m3=2.0, c=1.0, t_I=0.0, t_F=10.0, x1=[0.0], x3=[-3.0])
    v = solve_vertex_closed_form(DecaySpec(**base, x2=[2.0]))
    print(f"closed form: t={v.t:.9f}  x={v.x[0]:+.3e}  p2={v.p2[0]:.6f}  p3={v.p3[0]:.6f}")
    print("final x2   vertex t   vertex x    action")
    for x2 in (1.0, 2.0, 3.0, 4.0):
        v = solve_vertex_numeric(DecaySpec(**base, x2=[x2]))
        print(f"  {x2:5.1f}  {v.t:9.5f}  {v.x[0]:+9.5f}  {v.action:9.4f}")
    print("light speed   time before the end")
    for c in (1.0, 10.0, 100.0):
        v = solve_vertex_closed_form(DecaySpec(**{**base, "c": c}, x2=[2.0]))
        print(f"  {c:7.1f}     {base['t_F'] - v.t:.6f}")


if __name__ == "__main__":
    main()
