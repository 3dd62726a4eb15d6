# polish Dunavant degree-8 rule: unknowns w0,(w1,a1),(w2,a2),(w3,a3),(w4,b4,c4)
from mpmath import mp, mpf, matrix, lu_solve, factorial
mp.dps = 50
x0 = [mpf('0.144315607677787'), mpf('0.095091634267285'), mpf('0.459292588292723'),
      mpf('0.103217370534718'), mpf('0.170569307751760'), mpf('0.032458497623198'),
      mpf('0.050547228317031'), mpf('0.027230314174435'), mpf('0.008394777409958'),
      mpf('0.263112829634638')]
def pts(x):
    w0,w1,a1,w2,a2,w3,a3,w4,b4,c4 = x
    P=[((mpf(1)/3,)*3, w0)]
    for w,a in ((w1,a1),(w2,a2),(w3,a3)):
        b=1-2*a
        for t in ((a,a,b),(a,b,a),(b,a,a)): P.append((t,w/3))
    d=1-b4-c4
    import itertools
    for t in set(itertools.permutations((0,1,2))):
        v=(b4,c4,d); P.append(((v[t[0]],v[t[1]],v[t[2]]), w4/6))
    return P
# moments on barycentric monomials l1^i l2^j (l3 = 1-l1-l2); normalized by area: int = 2 i! j! /(i+j+2)!
mons=[(i,j) for i in range(9) for j in range(9) if i+j<=8 and i>=j]
def F(x):
    P=pts(x); out=[]
    for i,j in mons:
        s=sum(w*l[0]**i*l[1]**j for l,w in P)
        out.append(s-2*factorial(i)*factorial(j)/factorial(i+j+2))
    return out
x=x0[:]
for it in range(30):
    f=F(x); J=[]
    h=mpf('1e-30')
    cols=[]
    for k in range(len(x)):
        xp=x[:]; xp[k]+=h
        cols.append([(a-b)/h for a,b in zip(F(xp),f)])
    # least squares via normal equations
    import mpmath
    Jm=mpmath.matrix(len(f),len(x))
    for k in range(len(x)):
        for r in range(len(f)): Jm[r,k]=cols[k][r]
    dx=mpmath.lu_solve(Jm.T*Jm, -(Jm.T*mpmath.matrix(f)))
    x=[xi+dxi for xi,dxi in zip(x,dx)]
print(max(abs(v) for v in F(x)))
for v in x: print(mpmath.nstr(v,20))
