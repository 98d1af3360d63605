# Independent brute force: full Cartesian product, Fractions for mean/median, float sqrt for SD.
import json, itertools, math
from fractions import Fraction as F
TOL_M=F(5,100); TOL_SD=0.1; SLACK=1e-9
def stats(v):
    n=len(v); s=sorted(v); mean=F(sum(v),n)
    med=F(s[n//2]) if n%2 else F(s[n//2-1]+s[n//2],2)
    ss=sum((x-mean)**2 for x in v)
    pop=math.sqrt(ss/n); samp=math.sqrt(ss/(n-1)) if n>1 else 0.0
    return mean,med,pop,samp
def audit(mean,med,sd,n,lo=1,hi=6):
    mean=F(str(mean)); med=F(str(med))
    wit=None; conv=set()
    for v in itertools.product(range(lo,hi+1),repeat=n):
        m,md,p,s=stats(v)
        if abs(m-mean)>TOL_M or abs(md-med)>TOL_M: continue
        ok=[]
        if abs(p-sd)<=TOL_SD+SLACK: ok.append("population")
        if abs(s-sd)<=TOL_SD+SLACK: ok.append("sample")
        if ok:
            conv.update(ok); t=tuple(sorted(v))
            if wit is None or t<wit: wit=t
    return wit, conv
out=[]
for line in open("corpus/eval/tables.jsonl"):
    r=json.loads(line)
    if r.get("summary"): v="skipped(summary)"; w=None
    elif r["median"] is None or r["sd"] is None: v="skipped(blank)"; w=None
    else:
        a,_=audit(r["mean"],r["median"],r["sd"],r["n"]); b,_=audit(r["median"],r["mean"],r["sd"],r["n"])
        v="ok" if a else "ok-if-swapped" if b else "infeasible-both"; w=a or b
    out.append((r["table"],r["cohort"],r["item"],v,list(w) if w else None))
for o in out: print(json.dumps(o))
