import json
T2=[("I am satisfied with it.",3,3.25,1.4,5,4.6,0.5),
("I would recommend it to a friend.",3,3,0.9,5,5,0.9),
("It is fun to use.",2,2,0.9,5,5.2,0.4),
("It works the way I want it to work.",3,3,0.8,5,5,0.6),
("It is wonderful.",3,2.75,0.5,5,4.8,0.4),
("I feel I need to have it.",2.5,2.5,0.8,4,4.6,0.8),
("It is pleasant to use.",2,2.25,0.9,5,5,0.6)]
S2=(3,2.64,1.07,5,5,0.67)
T3=[("It is confusing.",3.5,3,1.2,2,1.6,0.5),
("It is error prone.",4,3.5,0.9,2,1.6,0.5),
("It is frustrating.",4,3.25,1.3,1,1,0),
("I need the manual often when using the system.",5,5,1,1,1.4,0.5),
("Using it costs a lot of mental effort.",5,4.5,0.9,1,1.8,1.2),
("I find it easy to recover from errors.",2.5,2.75,0.8,4,4.4,0.5),
("It is rigid and inflexible.",4,4,1.4,2,1.8,0.7),
("It is controllable.",5,5,0,6,5.4,0.8),
("It shows uncontrollable behavior.",4,4,1.4,2,2,1.1),
("It is cumbersome.",2,2.25,1.1,1,1.6,0.8),
("It is understandable.",5,4.75,1.1,6,5.6,0.8),
("It is easy to remember.",3,3.25,1.3,5,5.4,0.5),
("It provides guidance.",4,4.5,0.9,5,4.8,0.4),
("It is easy to use.",4,4.25,1.7,6,5.6,0.5)]
S3=(3.9,3.9,1.4,3.1,3.1,0.75)
T4=[("It is easy to use.",5.5,5.5,0.5,6,5.6,0.5),
("It is simple to use.",5.5,5.5,0.5,5,4.5,0.5),
("It is user friendly.",4.5,4,1.2,6,5.4,0.8),
("It requires the fewest steps possible to accomplish what I want to do with it.",5,4.5,1.5,5,4.8,0.7),
("It is flexible.",2.5,3.25,1.6,5,4.6,0.5),
("Using it is effortless.",2.5,3.25,1.6,5,4.6,0.5),
("I can use it without written instructions.",3,3,1.6,5,5.2,0.7),
("I don't notice any inconsistencies as I use it.",4.5,4.25,0.8,5,5,0.9),
("Both occasional and regular users would like it.",3.5,3.75,0.8,5,4.8,0.4),
("I can recover from mistakes quickly and easily.",3.5,3.75,0.8,5,5.4,0.5),
("I can use it successfully every time.",4.5,4.5,0.5,5,5,0)]
S4=(4,4.11,1.4,5,5.11,0.68)
T5=[("How much were you able to control events?",5.6,None,None),
("How responsive was the environment to actions that you performed?",5.6,None,None),
("How natural did your interaction with the environment seem?",5.2,None,None),
("How natural was the mechanism that controlled movement through the environment?",4.4,None,None),
("How aware were you of events occurring in the real world around you?",4.2,None,None),
("How aware were you of your display and control devices?",5.2,None,None),
("Were you able to anticipate what would happen next in response to the actions that you performed?",5.6,None,None),
("How completely were you able to actively survey or search the environment using vision?",4.8,5.4,0.4),
("How compelling was your sense of moving around inside the virtual environment?",4.6,5.5,0.5),
("How closely were you able to examine objects?",4.2,None,None),
("How well could you examine objects from multiple viewpoints?",4.4,None,None),
("To what degree did you feel confused or disoriented at the beginning of breaks or at the end of the experimental session?",2,None,None),
("How involved were you in the virtual environment experience?",4.8,None,None),
("How distracting was the control mechanism?",2.8,None,None),
("How much delay did you experience delays between your actions and expected outcomes?",2.2,None,None),
("How quickly did you adjust to the virtual environment experience?",5,None,None),
("How proficient in moving and interacting with the virtual environment did you feel at the end of the experience?",5.4,None,None),
("How much did the visual display quality interfere or distract you from performing assigned tasks or required activities?",1.8,1.2,1.2),
("How much did the control devices interfere with the performance of assigned tasks or with other activities?",3,3.9,0.9),
("How well could you concentrate on the assigned tasks or required activities rather than on the mechanisms used to perform those tasks or activities?",5.4,5.5,0.5)]
rows=[]
def row(table,item,cohort,n,mean,median,sd,summary=False):
    r=dict(table=table,item=item,cohort=cohort,n=n,mean=mean,median=median,sd=sd)
    if summary: r["summary"]=True
    rows.append(r)
for tname,T,S in (("table2",T2,S2),("table3",T3,S3),("table4",T4,S4)):
    for it,pm,pmd,ps,vm,vmd,vs in T:
        row(tname,it,"paper",4,pm,pmd,ps); row(tname,it,"vts",5,vm,vmd,vs)
    row(tname,"(all items)","paper",4,S[0],S[1],S[2],True); row(tname,"(all items)","vts",5,S[3],S[4],S[5],True)
for it,m,md,s in T5: row("table5",it,"vts",5,m,md,s)
def num(v): return v if v is None or v!=int(v) else int(v)
with open("corpus/eval/tables.jsonl","w") as f:
    for r in rows:
        r={k:(num(v) if isinstance(v,float) else v) for k,v in r.items()}
        f.write(json.dumps(r,ensure_ascii=False)+"\n")
# recall: 13 steps; experiment errors [1,1,1,1,0], control [3,3,2,2]
def rec(p,g,wrong):
    ps=[{"where":True,"what":True} for _ in range(13)]
    for i,kind in wrong:
        ps[i-1]["where" if kind=="where" else "what"]=False
    return dict(participant=p,group=g,perStep=ps,consultations=0)
R=[rec("e1","experiment",[(5,"what")]),rec("e2","experiment",[(10,"where")]),rec("e3","experiment",[(2,"what")]),
   rec("e4","experiment",[(11,"where")]),rec("e5","experiment",[]),
   rec("c1","control",[(2,"what"),(4,"where"),(12,"what")]),rec("c2","control",[(2,"what"),(3,"where"),(13,"what")]),
   rec("c3","control",[(5,"what"),(10,"where")]),rec("c4","control",[(2,"what"),(11,"where")])]
# one participant forgets both aspects of a step: still one error
R[5]["perStep"][3]["what"]=False
with open("corpus/eval/recall.jsonl","w") as f:
    for r in R: f.write(json.dumps(r)+"\n")
print(len(rows),"rows")
